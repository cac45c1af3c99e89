use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::{write_merged, PreparedPair, Scorer, ScorerModel, TaggedMergedCloud};
use crate::error::{Error, Result};
use crate::geom::RigidTransform;

struct Channel {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A long-running child process that scores merged clouds.
///
/// Protocol, one exchange per request: the scorer writes
/// `SCORE <path> <scale>\n` to the child's stdin, where `<path>` is a merged
/// cloud in the `x y z tag` text format, and reads back one line holding a
/// decimal in `[0, 1]`. Anything else is an error.
pub struct ExternalScorer {
    channel: Mutex<Channel>,
    scratch: tempfile::TempDir,
}

impl ExternalScorer {
    /// Spawns `program args...`.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::ExternalScorer(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalScorer {
            channel: Mutex::new(Channel { child, stdin, stdout }),
            scratch: tempfile::tempdir()?,
        })
    }

    /// Spawns a whitespace-separated command line.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::ExternalScorer("empty scorer command".into()))?;
        let args: Vec<String> = parts.collect();
        Self::spawn(&program, &args)
    }
}

impl Scorer for ExternalScorer {
    fn score_merged(&self, m: &TaggedMergedCloud, scale: f64) -> Result<f64> {
        let file = tempfile::Builder::new()
            .suffix(".xyzt")
            .tempfile_in(self.scratch.path())?;
        write_merged(file.path(), m)?;
        let mut ch = self
            .channel
            .lock()
            .map_err(|_| Error::ExternalScorer("scorer channel poisoned".into()))?;
        let fail = |e: std::io::Error| Error::ExternalScorer(format!("scorer i/o: {e}"));
        writeln!(ch.stdin, "SCORE {} {}", file.path().display(), scale).map_err(fail)?;
        ch.stdin.flush().map_err(fail)?;
        let mut line = String::new();
        let n = ch.stdout.read_line(&mut line).map_err(fail)?;
        if n == 0 {
            return Err(Error::ExternalScorer("scorer closed its output".into()));
        }
        let s: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::ExternalScorer(format!("malformed reply `{}`", line.trim())))?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ExternalScorer(format!("score {s} outside [0, 1]")));
        }
        Ok(s)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Ok(ch) = self.channel.get_mut() {
            let _ = ch.child.kill();
            let _ = ch.child.wait();
        }
    }
}

/// Tries the external scorer and falls back to the internal model whenever
/// it fails.
pub struct FallbackScorer {
    pub primary: ExternalScorer,
    pub fallback: ScorerModel,
}

impl Scorer for FallbackScorer {
    fn score_merged(&self, m: &TaggedMergedCloud, scale: f64) -> Result<f64> {
        self.primary.score_merged(m, scale).or_else(|e| {
            log::warn!("external scorer failed ({e}); using internal model");
            self.fallback.score_merged(m, scale)
        })
    }

    fn score_hypothesis(&self, pair: &PreparedPair<'_>, t: &RigidTransform) -> Result<f64> {
        match self.primary.score_hypothesis(pair, t) {
            Ok(s) => Ok(s),
            Err(e) => {
                log::warn!("external scorer failed ({e}); using internal model");
                self.fallback.score_hypothesis(pair, t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::merge_clouds;
    use crate::geom::{PointCloud, Vec3};

    fn merged() -> TaggedMergedCloud {
        let p = PointCloud::new(vec![Vec3::zeros(), Vec3::x()]);
        merge_clouds(&p, &p).unwrap()
    }

    fn sh(script: &str) -> ExternalScorer {
        ExternalScorer::spawn("sh", &["-c".into(), script.into()]).unwrap()
    }

    #[test]
    fn reads_scores_and_sees_the_file() {
        // Replies with the number of lines in the file divided by 10.
        let s = sh("while read cmd path scale; do n=$(wc -l < \"$path\"); echo \"0.$n\"; done");
        assert_eq!(s.score_merged(&merged(), 1.0).unwrap(), 0.4);
        assert_eq!(s.score_merged(&merged(), 2.0).unwrap(), 0.4);
    }

    #[test]
    fn rejects_bad_replies() {
        assert!(matches!(sh("while read l; do echo 1.5; done").score_merged(&merged(), 1.0), Err(Error::ExternalScorer(_))));
        assert!(matches!(sh("while read l; do echo nope; done").score_merged(&merged(), 1.0), Err(Error::ExternalScorer(_))));
        assert!(matches!(sh("exit 0").score_merged(&merged(), 1.0), Err(Error::ExternalScorer(_))));
        assert!(ExternalScorer::spawn("/nonexistent/scorer", &[]).is_err());
    }

    #[test]
    fn fallback_uses_model() {
        let fallback = ScorerModel {
            weights: [0.0; 6],
            bias: 0.0,
            means: [0.0; 6],
            stds: [1.0; 6],
            with_tags: true,
            features: Default::default(),
            final_loss: 0.0,
        };
        let f = FallbackScorer { primary: sh("exit 0"), fallback };
        assert_eq!(f.score_merged(&merged(), 1.0).unwrap(), 0.5);
    }
}
