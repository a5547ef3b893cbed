//! Library surface of the `cafe` command-line tool, split out so the
//! config grammar and subcommands are testable directly.

pub mod commands;
pub mod config;

use commands::CliResult;
use config::RunConfig;

pub const USAGE: &str = "\
usage: cafe <subcommand> [--config PATH] [--<key> VALUE]...

subcommands:
  train      fit a model and write checkpoint, report and reconstruction
  eval       recompute metrics from a checkpoint (needs --checkpoint)
  spectrum   enumerate admissible frequencies, verify symbolic/DFT
             containment, dump NTK eigenvalues (needs --freqs)
  ablate     sweep one axis (--axis N|mlp|scale|J --values a,b,c)
  gradcheck  audit autodiff gradients against finite differences

options mirror the config file keys (task, encoder, M, J, N, D_h, L_mlp,
scale, base, seed, iters, lr, lr_decay, lr_decay_at, batch, input, out,
checkpoint, freqs, dft_grid, axis, values, size, rho, res, radius);
precedence is defaults < config file < flags. CAFE_THREADS caps ablate
parallelism (default 1).";

/// Parses `--key value` / `--key=value` pairs; `--config` is handled by
/// the caller.
pub fn parse_flags(args: &[String]) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    let mut it = args.iter().peekable();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(format!("unexpected argument `{arg}` (flags look like --key value)"));
        };
        if let Some((k, v)) = key.split_once('=') {
            pairs.push((k.to_string(), v.to_string()));
        } else {
            let Some(value) = it.next() else {
                return Err(format!("flag --{key} needs a value"));
            };
            pairs.push((key.to_string(), value.clone()));
        }
    }
    Ok(pairs)
}

/// Dispatches a parsed config to its subcommand.
pub fn run_subcommand(subcommand: &str, cfg: &RunConfig) -> CliResult<()> {
    match subcommand {
        "train" => commands::run_train(cfg),
        "eval" => commands::run_eval(cfg),
        "spectrum" => commands::run_spectrum(cfg),
        "ablate" => commands::run_ablate(cfg),
        "gradcheck" => commands::run_gradcheck(cfg),
        other => Err(format!("unknown subcommand `{other}`\n{USAGE}").into()),
    }
}
