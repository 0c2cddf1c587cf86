use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdpre_core::bench::{emit_table, run_suite, BenchConfig, TableFormat};
use cdpre_core::envelope::{from_json, to_json, EnvelopeBackend, EnvelopeObject, RetainedKey};
use cdpre_core::groups::{Bls12Backend, DebugBackend};
use cdpre_core::indcpa::{run_game, GameConfig, Strategy};
use cdpre_core::policy::{parse_attribute_set, parse_policy, Attribute};
use cdpre_core::scheme::{
    decrypt, decrypt_reencrypted, dem_open, dem_seal, encrypt, issue_crossdomain_key, kdf,
    keygen_retained, reencrypt_corrected, reencrypt_paper, rekeygen_paper, setup, Ciphertext,
    CrossDomainUserKey, MasterSecretKey, PublicKey, ReEncryptedCiphertext, ReKey, ReencMode,
    SymmetricKey, TargetKey,
};
use cdpre_core::sites::run_demo;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Parser)]
#[command(
    name = "cdpre",
    version,
    about = "Cross-domain attribute-based proxy re-encryption toolkit"
)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Curve)]
    backend: BackendArg,
    /// Seed for every random choice; OS entropy when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Prime for the debug backend.
    #[arg(long, global = true, default_value_t = 101)]
    debug_modulus: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Debug,
    Curve,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a public key and master secret key.
    Setup {
        #[arg(long)]
        attrs: String,
        #[arg(long)]
        out_pk: PathBuf,
        #[arg(long)]
        out_msk: PathBuf,
    },
    /// Issue a user key, or a cross-domain key with --cross-domain.
    Keygen(KeygenArgs),
    /// Encrypt a payload file under a policy.
    Encrypt {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sealed payload output.
        #[arg(long)]
        out_payload: PathBuf,
    },
    Decrypt {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long)]
        payload: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a re-encryption key from a key saved with --retain.
    Rekeygen {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Reencrypt(ReencryptArgs),
    /// Decrypt a re-encrypted ciphertext with a cross-domain key.
    DecryptRe {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        rct: PathBuf,
        #[arg(long)]
        payload: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the IND-CPA game and print its statistics as JSON.
    Game {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value = "(Doctor AND Professor AND Researcher)")]
        policy: String,
        /// Universe for Setup; defaults to the policy's attributes.
        #[arg(long)]
        attrs: Option<String>,
        #[arg(long, default_value = "OISP Symposium")]
        m0: String,
        #[arg(long, default_value = "The 9th Student Conference")]
        m1: String,
        #[arg(long, default_value = "random-guess")]
        strategy: String,
    },
    Bench {
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "1000,1500,2000")]
        trials: Vec<usize>,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scripted scenario.
    Demo {
        #[arg(value_enum)]
        scenario: Scenario,
        /// Event log output (JSON lines).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long)]
    attrs: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pk: Option<PathBuf>,
    #[arg(long)]
    msk: Option<PathBuf>,
    /// Keep k, kb and k_i in the key file for rekeygen.
    #[arg(long)]
    retain: bool,
    #[arg(long)]
    cross_domain: bool,
    /// Target public key output for --cross-domain.
    #[arg(long)]
    out_tpk: Option<PathBuf>,
}

#[derive(Args)]
struct ReencryptArgs {
    #[arg(long, default_value = "corrected")]
    mode: String,
    #[arg(long)]
    pk: PathBuf,
    #[arg(long)]
    ct: PathBuf,
    /// Target policy.
    #[arg(long)]
    policy: String,
    #[arg(long)]
    out: PathBuf,
    /// Re-encryption key (paper mode).
    #[arg(long)]
    rk: Option<PathBuf>,
    /// Master secret key (corrected mode).
    #[arg(long)]
    msk: Option<PathBuf>,
    /// Target public key (corrected mode).
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Sites,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{message}")]
    Domain { name: &'static str, message: String },
}

impl CliError {
    fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Io { .. } => "IoError",
            CliError::Domain { name, .. } => name,
        }
    }
}

macro_rules! domain_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain { name: e.name(), message: e.to_string() }
            }
        }
    )*};
}

domain_errors!(
    cdpre_core::policy::PolicyError,
    cdpre_core::scheme::SchemeError,
    cdpre_core::envelope::EnvelopeError,
    cdpre_core::groups::GroupError,
    cdpre_core::indcpa::GameError,
    cdpre_core::bench::BenchError,
    cdpre_core::sites::SiteError
);

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn load<B: EnvelopeBackend, T: EnvelopeObject<B>>(path: &Path) -> Result<T, CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(from_json::<B, T>(&text)?.1)
}

fn save<B: EnvelopeBackend, T: EnvelopeObject<B>>(
    backend: &B,
    obj: &T,
    path: &Path,
) -> Result<(), CliError> {
    write(path, to_json(backend, obj).as_bytes())
}

fn required<'a>(arg: &'a Option<PathBuf>, flag: &str, why: &str) -> Result<&'a Path, CliError> {
    arg.as_deref()
        .ok_or_else(|| CliError::Usage(format!("{flag} is required {why}")))
}

fn universe(text: &str) -> Result<Vec<Attribute>, CliError> {
    Ok(parse_attribute_set(text)?.into_iter().collect())
}

fn rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn run<B: EnvelopeBackend>(backend: B, cli: &Cli) -> Result<(), CliError> {
    let mut rng = rng(cli.seed);
    match &cli.command {
        Command::Setup {
            attrs,
            out_pk,
            out_msk,
        } => {
            let (msk, pk) = setup(backend.clone(), &universe(attrs)?, &mut rng)?;
            save(&backend, &pk, out_pk)?;
            save(&backend, &msk, out_msk)?;
        }
        Command::Keygen(k) => {
            let attrs = parse_attribute_set(&k.attrs)?;
            if k.cross_domain {
                let out_tpk = required(&k.out_tpk, "--out-tpk", "with --cross-domain")?;
                let beta = backend.random_scalar(&mut rng);
                let cdk = issue_crossdomain_key(&backend, &beta, &attrs)?;
                save(&backend, &cdk, &k.out)?;
                save(&backend, &TargetKey::from_secret(&backend, &beta), out_tpk)?;
            } else {
                let pk: PublicKey<B> = load(required(&k.pk, "--pk", "for keygen")?)?;
                let msk: MasterSecretKey<B> = load(required(&k.msk, "--msk", "for keygen")?)?;
                let (usk, secrets) = keygen_retained(&msk, &pk, &attrs, &mut rng)?;
                let key = RetainedKey {
                    usk,
                    secrets: k.retain.then_some(secrets),
                };
                save(&backend, &key, &k.out)?;
            }
        }
        Command::Encrypt {
            pk,
            policy,
            input,
            out,
            out_payload,
        } => {
            let pk: PublicKey<B> = load(pk)?;
            let payload = read(input)?;
            let key = SymmetricKey::random(&backend, &mut rng);
            let ct = encrypt(&pk, &parse_policy(policy)?, &key, &mut rng)?;
            save(&backend, &ct, out)?;
            write(out_payload, &dem_seal(&kdf(&backend, &key), &payload))?;
        }
        Command::Decrypt {
            pk,
            key,
            ct,
            payload,
            out,
        } => {
            let pk: PublicKey<B> = load(pk)?;
            let usk: RetainedKey<B> = load(key)?;
            let ct: Ciphertext<B> = load(ct)?;
            let k = decrypt(&pk, &usk.usk, &ct)?;
            write(out, &dem_open(&kdf(&backend, &k), &read(payload)?)?)?;
        }
        Command::Rekeygen {
            pk,
            key,
            target,
            out,
        } => {
            let pk: PublicKey<B> = load(pk)?;
            let key: RetainedKey<B> = load(key)?;
            let target: TargetKey<B> = load(target)?;
            let secrets = key
                .secrets
                .ok_or(cdpre_core::scheme::SchemeError::MissingRetainedSecrets)?;
            let rk = rekeygen_paper(&key.usk, &secrets, &target, &pk, &mut rng)?;
            save(&backend, &rk, out)?;
        }
        Command::Reencrypt(r) => {
            let mode = ReencMode::parse(&r.mode).ok_or_else(|| {
                CliError::Usage(format!("unknown mode {:?} (paper|corrected)", r.mode))
            })?;
            let pk: PublicKey<B> = load(&r.pk)?;
            let ct: Ciphertext<B> = load(&r.ct)?;
            let policy2 = parse_policy(&r.policy)?;
            let rct = match mode {
                ReencMode::Paper => {
                    let rk: ReKey<B> = load(required(&r.rk, "--rk", "in paper mode")?)?;
                    reencrypt_paper(&pk, &rk, &ct, &policy2, &mut rng)?
                }
                ReencMode::Corrected => {
                    let msk: MasterSecretKey<B> =
                        load(required(&r.msk, "--msk", "in corrected mode")?)?;
                    let target: TargetKey<B> =
                        load(required(&r.target, "--target", "in corrected mode")?)?;
                    reencrypt_corrected(&msk, &pk, &target, &ct, &policy2, &mut rng)?
                }
            };
            save(&backend, &rct, &r.out)?;
        }
        Command::DecryptRe {
            key,
            rct,
            payload,
            out,
        } => {
            let cdk: CrossDomainUserKey<B> = load(key)?;
            let rct: ReEncryptedCiphertext<B> = load(rct)?;
            let k = decrypt_reencrypted(&cdk, &rct)?;
            write(out, &dem_open(&kdf(&backend, &k), &read(payload)?)?)?;
        }
        Command::Game {
            trials,
            policy,
            attrs,
            m0,
            m1,
            strategy,
        } => {
            let policy = parse_policy(policy)?;
            let universe = match attrs {
                Some(a) => universe(a)?,
                None => policy.attributes().into_iter().collect(),
            };
            let strategy = Strategy::parse(strategy).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown strategy {strategy:?} (random-guess|constant-zero)"
                ))
            })?;
            let config = GameConfig {
                universe,
                policy,
                m0: m0.as_bytes().to_vec(),
                m1: m1.as_bytes().to_vec(),
                trials: *trials,
                seed: cli.seed.unwrap_or_else(|| rng.gen()),
                strategy,
            };
            println!("{}", run_game(&backend, &config)?.to_json());
        }
        Command::Bench {
            samples,
            trials,
            format,
            out,
        } => {
            let format = TableFormat::parse(format).ok_or_else(|| {
                CliError::Usage(format!("unknown format {format:?} (markdown|csv)"))
            })?;
            let config = BenchConfig {
                trial_counts: trials.clone(),
                samples: *samples,
                seed: cli.seed.unwrap_or_else(|| rng.gen()),
                ..BenchConfig::default()
            };
            let table = emit_table(&run_suite(&backend, &config)?, format);
            match out {
                Some(path) => write(path, &table)?,
                None => print!("{}", String::from_utf8_lossy(&table)),
            }
        }
        Command::Demo {
            scenario: Scenario::Sites,
            out,
        } => {
            let outcome = run_demo(backend, cli.seed.unwrap_or_else(|| rng.gen()))?;
            let log = outcome.sim.log().to_jsonl();
            if let Some(path) = out {
                write(path, log.as_bytes())?;
            }
            println!(
                "task {}: {}, issue {}: {}, {} events, {} violations",
                outcome.task_id,
                outcome.sim.task(&outcome.task_id)?.state,
                outcome.issue_id,
                outcome.sim.issue(&outcome.issue_id)?.state,
                outcome.sim.log().events().len(),
                outcome.violations.len()
            );
            for v in &outcome.violations {
                println!("violation: {v}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.backend {
        BackendArg::Curve => run(Bls12Backend::new(), &cli),
        BackendArg::Debug => match DebugBackend::new(cli.debug_modulus) {
            Ok(b) => run(b, &cli),
            Err(e) => Err(e.into()),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
