//! Run configuration: line-oriented `key = value` files plus flag
//! overrides, resolved with precedence defaults < file < flags.

use std::fmt;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Image,
    Func1d,
    Occupancy,
    Noiseblock,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Image => "image",
            Task::Func1d => "func1d",
            Task::Occupancy => "occupancy",
            Task::Noiseblock => "noiseblock",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoder {
    Rff,
    Pe,
    Chebyshev,
    Cafe,
    CafePlus,
}

impl Encoder {
    pub fn name(&self) -> &'static str {
        match self {
            Encoder::Rff => "rff",
            Encoder::Pe => "pe",
            Encoder::Chebyshev => "chebyshev",
            Encoder::Cafe => "cafe",
            Encoder::CafePlus => "cafeplus",
        }
    }

    fn uses_stack(&self) -> bool {
        matches!(self, Encoder::Cafe | Encoder::CafePlus)
    }

    fn uses_chebyshev(&self) -> bool {
        matches!(self, Encoder::Chebyshev | Encoder::CafePlus)
    }
}

/// Sweep axis for the ablate subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblateAxis {
    ParallelLayers,
    MlpDepth,
    Scale,
    ChebOrder,
}

impl AblateAxis {
    pub fn name(&self) -> &'static str {
        match self {
            AblateAxis::ParallelLayers => "N",
            AblateAxis::MlpDepth => "mlp",
            AblateAxis::Scale => "scale",
            AblateAxis::ChebOrder => "J",
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    File { line: usize },
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File { line } => write!(f, "line {line}"),
            Source::Flag => write!(f, "flag"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError {
    pub source: Option<Source>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            Some(src) => write!(f, "config error ({src}): {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(source: Option<Source>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        source,
        message: message.into(),
    }
}

/// Fully resolved configuration for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub encoder: Encoder,
    pub num_frequencies: usize,
    pub cheb_order: usize,
    pub parallel_layers: usize,
    pub width: usize,
    pub mlp_depth: usize,
    pub scale: f64,
    pub base: f64,
    pub seed: u64,
    pub iterations: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_at: Option<usize>,
    pub batch: usize,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub freqs: Vec<i64>,
    pub dft_grid: usize,
    pub axis: Option<AblateAxis>,
    pub values: Vec<f64>,
    pub size: usize,
    pub rho: f64,
    pub res: usize,
    pub radius: f64,
}

impl RunConfig {
    /// Key = value echo of every resolved field, one per line.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("task", self.task.name().into());
        kv("encoder", self.encoder.name().into());
        kv("M", self.num_frequencies.to_string());
        kv("J", self.cheb_order.to_string());
        kv("N", self.parallel_layers.to_string());
        kv("D_h", self.width.to_string());
        kv("L_mlp", self.mlp_depth.to_string());
        kv("scale", self.scale.to_string());
        kv("base", self.base.to_string());
        kv("seed", self.seed.to_string());
        kv("iters", self.iterations.to_string());
        kv("lr", self.lr.to_string());
        kv("lr_decay", self.lr_decay.to_string());
        kv(
            "lr_decay_at",
            match self.lr_decay_at {
                Some(at) => at.to_string(),
                None => format!("{} (auto 70%)", self.iterations * 7 / 10),
            },
        );
        kv("batch", self.batch.to_string());
        if let Some(p) = &self.input {
            kv("input", p.display().to_string());
        }
        kv("out", self.out.display().to_string());
        if let Some(p) = &self.checkpoint {
            kv("checkpoint", p.display().to_string());
        }
        if !self.freqs.is_empty() {
            kv(
                "freqs",
                self.freqs.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        kv("dft_grid", self.dft_grid.to_string());
        if let Some(axis) = self.axis {
            kv("axis", axis.name().into());
            kv(
                "values",
                self.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        match self.task {
            Task::Noiseblock => {
                kv("size", self.size.to_string());
                kv("rho", self.rho.to_string());
            }
            Task::Func1d => kv("size", self.size.to_string()),
            Task::Occupancy => {
                kv("res", self.res.to_string());
                kv("radius", self.radius.to_string());
            }
            Task::Image => {}
        }
        s
    }
}

/// Partially specified configuration being assembled.
#[derive(Clone, Debug, Default)]
struct Builder {
    task: Option<Task>,
    encoder: Option<Encoder>,
    num_frequencies: Option<usize>,
    cheb_order: Option<(usize, Source)>,
    parallel_layers: Option<(usize, Source)>,
    width: Option<usize>,
    mlp_depth: Option<usize>,
    scale: Option<f64>,
    base: Option<f64>,
    seed: Option<u64>,
    iterations: Option<usize>,
    lr: Option<f64>,
    lr_decay: Option<f64>,
    lr_decay_at: Option<usize>,
    batch: Option<usize>,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    freqs: Option<Vec<i64>>,
    dft_grid: Option<usize>,
    axis: Option<AblateAxis>,
    values: Option<Vec<f64>>,
    size: Option<usize>,
    rho: Option<f64>,
    res: Option<usize>,
    radius: Option<f64>,
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, src: Source) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| err(Some(src), format!("cannot parse `{value}` for key `{key}`")))
}

impl Builder {
    fn set(&mut self, key: &str, value: &str, src: Source) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "task" => {
                self.task = Some(match value {
                    "image" => Task::Image,
                    "func1d" => Task::Func1d,
                    "occupancy" => Task::Occupancy,
                    "noiseblock" => Task::Noiseblock,
                    other => return Err(err(Some(src), format!("unknown task `{other}`"))),
                })
            }
            "encoder" => {
                self.encoder = Some(match value {
                    "rff" => Encoder::Rff,
                    "pe" => Encoder::Pe,
                    "chebyshev" => Encoder::Chebyshev,
                    "cafe" => Encoder::Cafe,
                    "cafeplus" => Encoder::CafePlus,
                    other => return Err(err(Some(src), format!("unknown encoder `{other}`"))),
                })
            }
            "M" => self.num_frequencies = Some(parse_num(value, key, src)?),
            "J" => self.cheb_order = Some((parse_num(value, key, src)?, src)),
            "N" => self.parallel_layers = Some((parse_num(value, key, src)?, src)),
            "D_h" => self.width = Some(parse_num(value, key, src)?),
            "L_mlp" => self.mlp_depth = Some(parse_num(value, key, src)?),
            "scale" => self.scale = Some(parse_num(value, key, src)?),
            "base" => self.base = Some(parse_num(value, key, src)?),
            "seed" => self.seed = Some(parse_num(value, key, src)?),
            "iters" => self.iterations = Some(parse_num(value, key, src)?),
            "lr" => self.lr = Some(parse_num(value, key, src)?),
            "lr_decay" => self.lr_decay = Some(parse_num(value, key, src)?),
            "lr_decay_at" => self.lr_decay_at = Some(parse_num(value, key, src)?),
            "batch" => self.batch = Some(parse_num(value, key, src)?),
            "input" => self.input = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "freqs" => {
                let mut freqs = Vec::new();
                for part in value.split(',') {
                    freqs.push(parse_num(part, key, src)?);
                }
                self.freqs = Some(freqs);
            }
            "dft_grid" => self.dft_grid = Some(parse_num(value, key, src)?),
            "axis" => {
                self.axis = Some(match value {
                    "N" => AblateAxis::ParallelLayers,
                    "mlp" => AblateAxis::MlpDepth,
                    "scale" => AblateAxis::Scale,
                    "J" => AblateAxis::ChebOrder,
                    other => {
                        return Err(err(
                            Some(src),
                            format!("unknown axis `{other}` (expected N, mlp, scale or J)"),
                        ))
                    }
                })
            }
            "values" => {
                let mut values = Vec::new();
                for part in value.split(',') {
                    values.push(parse_num(part, key, src)?);
                }
                self.values = Some(values);
            }
            "size" => self.size = Some(parse_num(value, key, src)?),
            "rho" => self.rho = Some(parse_num(value, key, src)?),
            "res" => self.res = Some(parse_num(value, key, src)?),
            "radius" => self.radius = Some(parse_num(value, key, src)?),
            other => return Err(err(Some(src), format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let encoder = self.encoder.unwrap_or(Encoder::CafePlus);

        // encoder/field compatibility
        let cheb_order = match self.cheb_order {
            Some((j, src)) => {
                if encoder.uses_chebyshev() && j == 0 {
                    return Err(err(
                        Some(src),
                        format!("encoder `{}` requires J >= 1", encoder.name()),
                    ));
                }
                if !encoder.uses_chebyshev() && j != 0 {
                    return Err(err(
                        Some(src),
                        format!("encoder `{}` does not take Chebyshev features (J must be 0)", encoder.name()),
                    ));
                }
                j
            }
            None => {
                if encoder.uses_chebyshev() {
                    16
                } else {
                    0
                }
            }
        };
        let parallel_layers = match self.parallel_layers {
            Some((n, src)) => {
                if encoder.uses_stack() && n == 0 {
                    return Err(err(
                        Some(src),
                        format!("encoder `{}` requires N >= 1", encoder.name()),
                    ));
                }
                if !encoder.uses_stack() {
                    return Err(err(
                        Some(src),
                        format!("encoder `{}` has no parallel layers (drop N)", encoder.name()),
                    ));
                }
                n
            }
            None => {
                if encoder.uses_stack() {
                    3
                } else {
                    0
                }
            }
        };

        let iterations = self.iterations.unwrap_or(2000);
        let lr = self.lr.unwrap_or(1e-3);
        if lr <= 0.0 {
            return Err(err(None, format!("lr must be > 0, got {lr}")));
        }
        let scale = self.scale.unwrap_or(30.0);
        if scale <= 0.0 {
            return Err(err(None, format!("scale must be > 0, got {scale}")));
        }
        let rho = self.rho.unwrap_or(0.25);
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(err(None, format!("rho must lie in (0, 1], got {rho}")));
        }
        Ok(RunConfig {
            task: self.task.unwrap_or(Task::Image),
            encoder,
            num_frequencies: self.num_frequencies.unwrap_or(24),
            cheb_order,
            parallel_layers,
            width: self.width.unwrap_or(64),
            mlp_depth: self.mlp_depth.unwrap_or(1),
            scale,
            base: self.base.unwrap_or(2.0),
            seed: self.seed.unwrap_or(1),
            iterations,
            lr,
            lr_decay: self.lr_decay.unwrap_or(0.1),
            lr_decay_at: self.lr_decay_at,
            batch: self.batch.unwrap_or(0),
            input: self.input,
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            checkpoint: self.checkpoint,
            freqs: self.freqs.unwrap_or_default(),
            dft_grid: self.dft_grid.unwrap_or(64),
            axis: self.axis,
            values: self.values.unwrap_or_default(),
            size: self.size.unwrap_or(128),
            rho,
            res: self.res.unwrap_or(32),
            radius: self.radius.unwrap_or(0.6),
        })
    }
}

/// Splits config text into (key, value, line) entries. `#` starts a
/// comment; blank lines are skipped.
fn file_entries(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(
                Some(Source::File { line: line_no }),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        out.push((key.trim().to_string(), value.trim().to_string(), line_no));
    }
    Ok(out)
}

/// Builds a [`RunConfig`] from optional file text and flag overrides,
/// with precedence defaults < file < flags.
pub fn parse_config(
    file_text: Option<&str>,
    overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    let mut builder = Builder::default();
    if let Some(text) = file_text {
        for (key, value, line) in file_entries(text)? {
            builder.set(&key, &value, Source::File { line })?;
        }
    }
    for (key, value) in overrides {
        builder.set(key, value, Source::Flag)?;
    }
    builder.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_key_parses() {
        let cfg = parse_config(Some("lr = 0.001\n"), &[]).unwrap();
        assert_eq!(cfg.lr, 0.001);
    }

    #[test]
    fn flags_override_file() {
        let cfg = parse_config(
            Some("lr = 0.001\n"),
            &[("lr".to_string(), "0.01".to_string())],
        )
        .unwrap();
        assert_eq!(cfg.lr, 0.01);
    }

    #[test]
    fn cafe_with_zero_layers_is_incompatible() {
        let e = parse_config(Some("encoder = cafe\nN = 0\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("requires N >= 1"), "{e}");
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = parse_config(Some("lr = 0.001\nbogus = 3\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("unknown key `bogus`"));
        assert!(e.to_string().contains("line 2"));
    }

    #[test]
    fn unparsable_value_reports_line() {
        let e = parse_config(Some("iters = many\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("cannot parse `many`"));
        assert!(e.to_string().contains("line 1"));
    }

    #[test]
    fn chebyshev_requires_positive_order() {
        let e = parse_config(Some("encoder = chebyshev\nJ = 0\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("requires J >= 1"));
        // and rff rejects explicit J > 0
        let e = parse_config(Some("encoder = rff\nJ = 4\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("J must be 0"));
    }

    #[test]
    fn encoder_defaults_fill_in() {
        let cfg = parse_config(Some("encoder = cafeplus\n"), &[]).unwrap();
        assert_eq!(cfg.cheb_order, 16);
        assert_eq!(cfg.parallel_layers, 3);
        let cfg = parse_config(Some("encoder = rff\n"), &[]).unwrap();
        assert_eq!(cfg.cheb_order, 0);
        assert_eq!(cfg.parallel_layers, 0);
    }

    #[test]
    fn direct_encoder_rejects_explicit_layers() {
        let e = parse_config(Some("encoder = pe\nN = 2\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("no parallel layers"));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let cfg = parse_config(Some("# a comment\n\nlr = 0.5 # trailing\n"), &[]).unwrap();
        assert_eq!(cfg.lr, 0.5);
    }

    #[test]
    fn freqs_and_values_parse_lists() {
        let cfg = parse_config(Some("freqs = 1,2,5\naxis = N\nvalues = 1,2,3\n"), &[]).unwrap();
        assert_eq!(cfg.freqs, vec![1, 2, 5]);
        assert_eq!(cfg.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.axis, Some(AblateAxis::ParallelLayers));
    }

    #[test]
    fn echo_contains_resolved_values() {
        let cfg = parse_config(Some("encoder = cafe\nM = 10\n"), &[]).unwrap();
        let echo = cfg.echo();
        assert!(echo.contains("encoder = cafe"));
        assert!(echo.contains("M = 10"));
        assert!(echo.contains("J = 0"));
        assert!(echo.contains("N = 3"));
    }

    #[test]
    fn malformed_line_rejected() {
        let e = parse_config(Some("just words\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("expected `key = value`"));
    }
}
