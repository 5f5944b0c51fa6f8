use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use mz_core::StoreLog;
use mz_service::{router, AppState};

/// Serve the registry over HTTP.
#[derive(Debug, Parser)]
#[command(name = "mz-service", version)]
struct Args {
    /// Store directory.
    #[arg(long, env = "MZ_STORE")]
    store_path: PathBuf,
    #[arg(long, env = "MZ_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
    /// Directory that crawl requests resolve `fixture_dir` against.
    #[arg(long, env = "MZ_FIXTURES_ROOT", default_value = ".")]
    fixtures_root: PathBuf,
    /// Load the bundled seed zoo when the store is empty.
    #[arg(long)]
    seed: bool,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut store =
        StoreLog::open(&args.store_path).with_context(|| format!("opening store {}", args.store_path.display()))?;
    for w in store.warnings() {
        log::warn!("{w}");
    }
    if args.seed && store.is_empty() {
        mz_core::seed::load_seed(&mut store).context("loading seed zoo")?;
        log::info!("seeded store with {} records", store.len());
    }
    let app = router(AppState::new(store, args.fixtures_root));
    let listener = tokio::net::TcpListener::bind(&args.bind)
        .await
        .with_context(|| format!("binding {}", args.bind))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
