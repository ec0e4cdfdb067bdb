// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB 2 command-line front end over a statically linked Z3.
//!
//! Accepts the subset of the stock `z3` invocation conventions that the
//! verification driver uses, so the two binaries are interchangeable:
//!
//! ```text
//! smtshim -in [-t:<ms>]        read a script from stdin
//! smtshim [-t:<ms>] <file>     read a script from a file
//! smtshim --version            print the solver version
//! ```
//!
//! Output (sat/unsat/unknown, models, get-value responses, errors) goes to
//! stdout exactly as the library produces it.

use std::ffi::{CStr, CString};
use std::io::Read;
use std::process::ExitCode;

use z3_sys::{
    Z3_del_config, Z3_del_context, Z3_eval_smtlib2_string, Z3_get_error_code, Z3_get_error_msg,
    Z3_get_version, Z3_mk_config, Z3_mk_context, Z3_set_error_handler, Z3_set_param_value,
    Z3_error_code,
};

struct Options {
    from_stdin: bool,
    soft_timeout_ms: Option<u64>,
    file: Option<String>,
    show_version: bool,
}

fn parse_args() -> Result<Options, String> {
    let mut opts = Options {
        from_stdin: false,
        soft_timeout_ms: None,
        file: None,
        show_version: false,
    };
    for arg in std::env::args().skip(1) {
        if arg == "-in" || arg == "--in" {
            opts.from_stdin = true;
        } else if arg == "--version" || arg == "-version" {
            opts.show_version = true;
        } else if let Some(ms) = arg.strip_prefix("-t:") {
            let ms: u64 = ms
                .parse()
                .map_err(|_| format!("invalid -t: value: {arg}"))?;
            opts.soft_timeout_ms = Some(ms);
        } else if arg.starts_with("-T:") || arg == "-smt2" || arg == "-nw" {
            // hard-timeout and dialect flags: accepted for z3 compatibility,
            // enforcement is the caller's job
        } else if let Some(kv) = arg.split_once('=').filter(|_| !arg.starts_with('-')) {
            // z3-style `param=value` pairs, e.g. smt.random_seed=7
            let (k, v) = kv;
            let k = CString::new(k).map_err(|_| "bad parameter name".to_string())?;
            let v = CString::new(v).map_err(|_| "bad parameter value".to_string())?;
            unsafe { z3_sys::Z3_global_param_set(k.as_ptr(), v.as_ptr()) };
        } else if arg.starts_with('-') {
            return Err(format!("unknown flag: {arg}"));
        } else {
            opts.file = Some(arg);
        }
    }
    Ok(opts)
}

fn read_script(opts: &Options) -> Result<String, String> {
    if opts.from_stdin {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("failed to read stdin: {e}"))?;
        Ok(buf)
    } else if let Some(path) = &opts.file {
        std::fs::read_to_string(path).map_err(|e| format!("failed to read {path}: {e}"))
    } else {
        Err("no input: pass -in or a script file".to_string())
    }
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("smtshim: {e}");
            return ExitCode::from(2);
        }
    };

    if opts.show_version {
        let (mut major, mut minor, mut build, mut rev) = (0u32, 0u32, 0u32, 0u32);
        unsafe { Z3_get_version(&mut major, &mut minor, &mut build, &mut rev) };
        println!("Z3 version {major}.{minor}.{build}.{rev} - smtshim");
        return ExitCode::SUCCESS;
    }

    let script = match read_script(&opts) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("smtshim: {e}");
            return ExitCode::from(2);
        }
    };
    let script = match CString::new(script) {
        Ok(s) => s,
        Err(_) => {
            eprintln!("smtshim: script contains a NUL byte");
            return ExitCode::from(2);
        }
    };

    unsafe {
        let cfg = match Z3_mk_config() {
            Some(cfg) => cfg,
            None => {
                eprintln!("smtshim: failed to allocate solver configuration");
                return ExitCode::FAILURE;
            }
        };
        if let Some(ms) = opts.soft_timeout_ms {
            let key = CString::new("timeout").unwrap();
            let val = CString::new(ms.to_string()).unwrap();
            Z3_set_param_value(cfg, key.as_ptr(), val.as_ptr());
            z3_sys::Z3_global_param_set(key.as_ptr(), val.as_ptr());
        }
        let ctx = match Z3_mk_context(cfg) {
            Some(ctx) => ctx,
            None => {
                eprintln!("smtshim: failed to create solver context");
                Z3_del_config(cfg);
                return ExitCode::FAILURE;
            }
        };
        // Errors are inspected via Z3_get_error_code after evaluation.
        Z3_set_error_handler(ctx, None);

        let out = Z3_eval_smtlib2_string(ctx, script.as_ptr());
        if !out.is_null() {
            let text = CStr::from_ptr(out).to_string_lossy();
            print!("{text}");
            if !text.is_empty() && !text.ends_with('\n') {
                println!();
            }
        }

        let code = Z3_get_error_code(ctx);
        let failed = code != Z3_error_code::Ok;
        if failed {
            let msg = Z3_get_error_msg(ctx, code);
            if !msg.is_null() {
                println!("(error \"{}\")", CStr::from_ptr(msg).to_string_lossy());
            }
        }

        Z3_del_context(ctx);
        Z3_del_config(cfg);

        if failed {
            ExitCode::FAILURE
        } else {
            ExitCode::SUCCESS
        }
    }
}
