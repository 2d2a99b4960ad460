use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mediacloud::api::{self, AppState};
use mediacloud::config::{Config, FetchMode};
use mediacloud::fetch::Fetcher;
use mediacloud::ingest::{self, Clock, Pipeline};
use mediacloud::store::{self as csvio, FeedType, Store, TopicSpec};
use mediacloud::topics::{export_topic, ingest_platform_posts, run_spider, ShareProvider, SpiderOptions};
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::{Arc, RwLock};

#[derive(Parser)]
#[command(name = "mediacloud", version, about = "News archive, feed ingest and topic datasets")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's data directory.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Current time as RFC 3339, for reproducible runs.
    #[arg(long, global = true, value_parser = parse_instant)]
    now: Option<DateTime<Utc>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Media sources.
    #[command(subcommand)]
    Media(MediaCmd),
    /// Feeds of media sources.
    #[command(subcommand)]
    Feeds(FeedsCmd),
    /// Feed discovery and polling.
    #[command(subcommand)]
    Ingest(IngestCmd),
    /// Topic datasets.
    #[command(subcommand)]
    Topic(TopicCmd),
    /// Prints ids and titles of stories matching a query.
    Search {
        query: String,
        #[arg(long, default_value_t = 20)]
        rows: usize,
    },
    /// Runs the REST API.
    Serve {
        #[arg(long)]
        listen: Option<String>,
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Subcommand)]
enum MediaCmd {
    /// Imports `media_id,name,url,start_date` rows.
    Import { csv: PathBuf },
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Add {
        #[arg(long)]
        name: String,
        #[arg(long)]
        url: String,
        #[arg(long)]
        start: Option<NaiveDate>,
    },
}

#[derive(Subcommand)]
enum FeedsCmd {
    /// Imports `feeds_id,media_id,url,active,type` rows.
    Import { csv: PathBuf },
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Add {
        #[arg(long)]
        media_id: u64,
        #[arg(long)]
        url: String,
    },
}

#[derive(Args, Clone)]
struct Source {
    #[arg(long, value_enum)]
    mode: Option<FetchMode>,
    /// Fixture corpus directory holding a manifest.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Simulated,
    Wall,
}

#[derive(Subcommand)]
enum IngestCmd {
    /// Polls due feeds until the given duration has elapsed.
    Run {
        /// For example `7d` or `36h`.
        #[arg(long, value_parser = humantime::parse_duration)]
        until: std::time::Duration,
        #[command(flatten)]
        source: Source,
        /// Defaults to simulated in fixture mode and wall in live mode.
        #[arg(long, value_enum)]
        clock: Option<ClockArg>,
    },
    /// Finds feeds for a medium and adds the new ones.
    Discover {
        #[arg(long)]
        media_id: u64,
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Subcommand)]
enum TopicCmd {
    Create {
        #[arg(long)]
        name: String,
        #[arg(long, conflicts_with = "query_file", required_unless_present = "query_file")]
        query: Option<String>,
        #[arg(long)]
        query_file: Option<PathBuf>,
        #[arg(long)]
        start: NaiveDate,
        #[arg(long)]
        end: NaiveDate,
        /// Seed media ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        media: Vec<u64>,
        /// Seed collection tag ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        collections: Vec<u64>,
        #[arg(long = "seed-url")]
        seed_urls: Vec<String>,
        #[arg(long)]
        max_rounds: Option<u32>,
        #[arg(long)]
        fetch_budget: Option<usize>,
    },
    Spider {
        #[arg(long)]
        id: u64,
        #[command(flatten)]
        source: Source,
        /// `url<TAB>count` share table.
        #[arg(long)]
        shares: Option<PathBuf>,
    },
    Export {
        #[arg(long)]
        id: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adds platform posts from a CSV file.
    SeedPosts {
        #[arg(long)]
        id: u64,
        #[arg(long)]
        csv: PathBuf,
    },
    List,
}

fn parse_instant(s: &str) -> Result<DateTime<Utc>, String> {
    ingest::parse_date(s).ok_or_else(|| format!("not a timestamp: {s:?}"))
}

type Failure = Box<dyn std::error::Error>;

struct Ctx {
    config: Config,
    now: DateTime<Utc>,
}

impl Ctx {
    fn open_store(&self) -> Result<Store, Failure> {
        std::fs::create_dir_all(&self.config.data_dir)?;
        Ok(Store::open(self.config.store_path())?)
    }

    fn with_source(&self, source: &Source) -> Config {
        let mut c = self.config.clone();
        if let Some(m) = source.mode {
            c.fetch_mode = m;
        }
        if let Some(dir) = &source.corpus {
            c.corpus = Some(dir.clone());
        }
        if let Some(w) = source.workers {
            c.workers = w;
        }
        c
    }
}

fn write_out(out: &Option<PathBuf>, bytes: Vec<u8>) -> Result<(), Failure> {
    use std::io::Write;
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn report_skipped(skipped: &[String]) {
    for s in skipped {
        eprintln!("skipped {s}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(d) = cli.data_dir {
        config.data_dir = d;
    }
    let ctx = Ctx { config, now: cli.now.unwrap_or_else(Utc::now) };
    match cli.command {
        Command::Media(cmd) => media(&ctx, cmd),
        Command::Feeds(cmd) => feeds(&ctx, cmd),
        Command::Ingest(cmd) => ingest_cmd(&ctx, cmd),
        Command::Topic(cmd) => topic(&ctx, cmd),
        Command::Search { query, rows } => {
            let store = ctx.open_store()?;
            for id in store.search_str(&query)?.into_iter().take(rows) {
                let s = store.story(id).expect("indexed story");
                println!("{}\t{}\t{}", s.stories_id, s.publish_date.date_naive(), s.title);
            }
            Ok(())
        }
        Command::Serve { listen, source } => serve(&ctx, listen, &source),
    }
}

fn media(ctx: &Ctx, cmd: MediaCmd) -> Result<(), Failure> {
    let mut store = ctx.open_store()?;
    match cmd {
        MediaCmd::Import { csv } => {
            let summary = csvio::import_media(&mut store, std::fs::File::open(csv)?, ctx.now.date_naive())?;
            report_skipped(&summary.skipped);
            println!("imported {} media", summary.inserted);
        }
        MediaCmd::Export { out } => {
            let mut buf = Vec::new();
            csvio::export_media(&store, &mut buf)?;
            write_out(&out, buf)?;
        }
        MediaCmd::Add { name, url, start } => {
            let id = store.add_media(&name, &url, start.unwrap_or(ctx.now.date_naive()))?;
            println!("{id}");
        }
    }
    store.sync()?;
    Ok(())
}

fn feeds(ctx: &Ctx, cmd: FeedsCmd) -> Result<(), Failure> {
    let mut store = ctx.open_store()?;
    match cmd {
        FeedsCmd::Import { csv } => {
            let summary = csvio::import_feeds(&mut store, std::fs::File::open(csv)?, ctx.now)?;
            report_skipped(&summary.skipped);
            println!("imported {} feeds", summary.inserted);
        }
        FeedsCmd::Export { out } => {
            let mut buf = Vec::new();
            csvio::export_feeds(&store, &mut buf)?;
            write_out(&out, buf)?;
        }
        FeedsCmd::Add { media_id, url } => {
            println!("{}", store.add_feed(media_id, &url, FeedType::Syndicated, ctx.now)?);
        }
    }
    store.sync()?;
    Ok(())
}

fn ingest_cmd(ctx: &Ctx, cmd: IngestCmd) -> Result<(), Failure> {
    let mut store = ctx.open_store()?;
    match cmd {
        IngestCmd::Run { until, source, clock } => {
            let config = ctx.with_source(&source);
            config.prepare()?;
            let fetcher = config.fetcher()?;
            let text = config.text_processor();
            let pipeline = Pipeline { fetcher: &*fetcher, text: &text, workers: config.workers };
            let clock = match clock {
                Some(ClockArg::Simulated) => Clock::Simulated,
                Some(ClockArg::Wall) => Clock::Wall,
                None if config.fetch_mode == FetchMode::Live => Clock::Wall,
                None => Clock::Simulated,
            };
            let end = ctx.now + chrono::Duration::from_std(until)?;
            let summary = ingest::run_until(&mut store, &pipeline, ctx.now, end, clock, |now, tick| {
                for p in &tick.polls {
                    eprintln!("{} feed {} status {} new {}", now.to_rfc3339(), p.feeds_id, p.status, p.new_stories);
                }
            })?;
            for d in &summary.diagnostics {
                eprintln!("{d}");
            }
            println!("ticks {} polls {} new_stories {}", summary.ticks, summary.polls, summary.new_stories);
        }
        IngestCmd::Discover { media_id, source } => {
            let config = ctx.with_source(&source);
            config.prepare()?;
            let fetcher = config.fetcher()?;
            let (discovery, added) = ingest::discover_and_add(&mut store, media_id, &*fetcher, ctx.now)?;
            for d in &discovery.diagnostics {
                eprintln!("{d}");
            }
            for url in &discovery.feeds {
                println!("{url}");
            }
            eprintln!("added {} feeds", added.len());
        }
    }
    store.sync()?;
    Ok(())
}

fn topic(ctx: &Ctx, cmd: TopicCmd) -> Result<(), Failure> {
    let mut store = ctx.open_store()?;
    match cmd {
        TopicCmd::Create { name, query, query_file, start, end, media, collections, seed_urls, max_rounds, fetch_budget } => {
            let query = match (query, query_file) {
                (Some(q), _) => q,
                (None, Some(path)) => std::fs::read_to_string(path)?.trim().to_string(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mut spec = TopicSpec::new(&name, &query, start, end);
            spec.seed_media = media.into_iter().collect::<BTreeSet<_>>();
            spec.seed_collections = collections.into_iter().collect::<BTreeSet<_>>();
            spec.seed_urls = seed_urls;
            if let Some(r) = max_rounds {
                spec.max_rounds = r;
            }
            if let Some(b) = fetch_budget {
                spec.fetch_budget = b;
            }
            println!("{}", store.create_topic(spec)?);
        }
        TopicCmd::Spider { id, source, shares } => {
            let mut config = ctx.with_source(&source);
            if shares.is_some() {
                config.shares = shares;
            }
            config.prepare()?;
            let fetcher = config.fetcher()?;
            let text = config.text_processor();
            let table = config.share_table()?;
            let opts = SpiderOptions {
                fetcher: &*fetcher,
                text: &text,
                workers: config.workers,
                now: ctx.now,
                shares: table.as_ref().map(|t| t as &dyn ShareProvider),
            };
            let lock = RwLock::new(store);
            let report = run_spider(&lock, id, &opts, |r| {
                eprintln!(
                    "round {} attempted {} fetched {} failures {} added {} deferred {}",
                    r.round,
                    r.attempted,
                    r.fetched,
                    r.failures,
                    r.added.len(),
                    r.deferred
                );
            })?;
            println!("members {} links {} rounds {}", report.members, report.links, report.rounds.len());
            store = lock.into_inner().map_err(|_| "store lock poisoned")?;
        }
        TopicCmd::Export { id, out } => {
            for path in export_topic(&store, id, &out)? {
                println!("{}", path.display());
            }
        }
        TopicCmd::SeedPosts { id, csv } => {
            let summary = ingest_platform_posts(&mut store, id, std::fs::File::open(csv)?, ctx.now)?;
            report_skipped(&summary.skipped);
            println!("posts {} urls_added {}", summary.posts, summary.urls_added.len());
        }
        TopicCmd::List => {
            for t in store.topics() {
                println!(
                    "{}\t{}\t{:?}\tmembers {}\trounds {}",
                    t.topic.topics_id,
                    t.topic.name,
                    t.status,
                    t.members.len(),
                    t.rounds_completed
                );
            }
        }
    }
    store.sync()?;
    Ok(())
}

fn serve(ctx: &Ctx, listen: Option<String>, source: &Source) -> Result<(), Failure> {
    let mut config = ctx.with_source(source);
    if let Some(l) = listen {
        config.listen = l;
    }
    config.prepare()?;
    let addr = config.listen_addr()?;
    // The blocking HTTP client must be built outside the async runtime.
    let fetcher: Arc<dyn Fetcher> = config.fetcher()?;
    let mut state = AppState::new(ctx.open_store()?, fetcher).with_keys(config.api_keys.clone());
    state.text = Arc::new(config.text_processor());
    state.workers = config.workers;
    if let Some(t) = config.share_table()? {
        state = state.with_shares(Arc::new(t));
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("listening on {addr}");
    runtime.block_on(api::serve(state, addr))?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
