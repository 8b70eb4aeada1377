use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use galleryflow::flow::{
    build_transition_model, dropoff_rates, fit_stair_penalty, flow_pagerank, popularity_distance_fit, Dropoff,
    PageRank, PenaltyFit, PopularityReport,
};
use galleryflow::ingest::{
    clean_events, parse_event_log_with, write_trips_jsonl, CleanTrip, CleaningReport, IngestConfig, LogFormat,
};
use galleryflow::museum::{load_museum_graph, EdgeKind, Museum, TOY_MUSEUM_JSON};
use galleryflow::segmentation::{segment_trips, ClusterProfile};
use galleryflow::synth::{generate_reviews, generate_trips, write_labels_jsonl, GenConfig};
use galleryflow::text::{
    aggregate_by_group, length_positivity, parse_reviews, rating_lag_analysis, score_all, tfidf_terms,
    write_reviews_jsonl, AggregateTable, GroupTerms, LagTable, LengthPositivity, Lexicon, DEMO_LEXICON_TSV,
};
use galleryflow::tours::{match_tour_sessions, tour_report, TourReport};
use galleryflow::{ClusterSolution, TransitionModel};
use serde::Serialize;

use crate::config::Loaded;
use crate::report::{num, opt, read_input, sha256_hex, Format, Provenance, Table, Writer};
use crate::CliError;

/// Inputs a command needs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub events: bool,
    pub reviews: bool,
}

/// Loaded inputs and the report writer for one invocation.
pub struct Run {
    pub loaded: Loaded,
    pub museum: Museum,
    events: Option<(Vec<u8>, LogFormat)>,
    reviews: Option<Vec<u8>>,
    lexicon: Lexicon,
    museum_path: Option<PathBuf>,
    pub out: Writer,
}

fn required(loaded: &Loaded, role: &'static str, value: &Option<String>) -> Result<PathBuf> {
    let p = value.as_deref().ok_or(CliError::Unset(role))?;
    let path = loaded.resolve(p);
    if !path.is_file() {
        return Err(CliError::Missing { role, path }.into());
    }
    Ok(path)
}

fn optional(loaded: &Loaded, role: &'static str, value: &Option<String>) -> Result<Option<PathBuf>> {
    match value {
        None => Ok(None),
        Some(_) => required(loaded, role, value).map(Some),
    }
}

impl Run {
    pub fn open(loaded: Loaded, needs: Needs, outdir: PathBuf, format: Format) -> Result<Run> {
        let paths = &loaded.config.paths;
        let mut hashes = BTreeMap::new();

        let museum_path = optional(&loaded, "museum", &paths.museum)?;
        let museum_bytes = match &museum_path {
            Some(p) => read_input("museum", p)?,
            None => TOY_MUSEUM_JSON.as_bytes().to_vec(),
        };
        hashes.insert("museum".to_string(), sha256_hex(&museum_bytes));
        let museum = load_museum_graph(museum_bytes.as_slice()).with_context(|| match &museum_path {
            Some(p) => format!("invalid museum file {}", p.display()),
            None => "invalid bundled museum".to_string(),
        })?;

        let events = if needs.events {
            let path = required(&loaded, "events", &paths.events)?;
            let bytes = read_input("events", &path)?;
            hashes.insert("events".to_string(), sha256_hex(&bytes));
            let fmt = match path.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("csv") => LogFormat::Csv,
                _ => LogFormat::Jsonl,
            };
            Some((bytes, fmt))
        } else {
            None
        };

        let (reviews, lexicon) = if needs.reviews {
            let path = required(&loaded, "reviews", &paths.reviews)?;
            let bytes = read_input("reviews", &path)?;
            hashes.insert("reviews".to_string(), sha256_hex(&bytes));
            let lexicon = match optional(&loaded, "lexicon", &paths.lexicon)? {
                Some(p) => {
                    let bytes = read_input("lexicon", &p)?;
                    hashes.insert("lexicon".to_string(), sha256_hex(&bytes));
                    let text = String::from_utf8(bytes)
                        .with_context(|| format!("lexicon file {} is not UTF-8", p.display()))?;
                    let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("lexicon");
                    Lexicon::from_tsv(name, &text)
                }
                None => {
                    hashes.insert("lexicon".to_string(), sha256_hex(DEMO_LEXICON_TSV.as_bytes()));
                    Lexicon::demo()
                }
            };
            (Some(bytes), lexicon)
        } else {
            (None, Lexicon::demo())
        };

        let provenance = Provenance {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: loaded.hash(),
            input_hashes: hashes,
        };
        let out = Writer::new(outdir, format, provenance)?;
        Ok(Run {
            loaded,
            museum,
            events,
            reviews,
            lexicon,
            museum_path,
            out,
        })
    }

    pub fn clean(&self) -> Result<(Vec<CleanTrip>, CleaningReport)> {
        let (bytes, fmt) = self.events.as_ref().expect("events loaded");
        let cfg = &self.loaded.config.ingest;
        let parsed = parse_event_log_with(bytes.as_slice(), *fmt, cfg.max_malformed_fraction)?;
        Ok(clean_events(&parsed, &self.museum, cfg))
    }

    pub fn ingest(&mut self) -> Result<Vec<CleanTrip>> {
        let (trips, cleaning) = self.clean()?;

        #[derive(Serialize)]
        struct Body<'a> {
            config: &'a IngestConfig,
            cleaning: &'a CleaningReport,
            languages: BTreeMap<&'a str, usize>,
            group_sizes: BTreeMap<u32, usize>,
        }
        let mut languages = BTreeMap::new();
        let mut group_sizes = BTreeMap::new();
        let mut table = Table::new(&[
            "trip_id",
            "language",
            "start_time",
            "duration",
            "plays",
            "objects",
            "group_size",
            "flagged_fraction",
        ]);
        for t in &trips {
            *languages.entry(t.language.as_str()).or_insert(0) += 1;
            *group_sizes.entry(t.group_size).or_insert(0) += 1;
            table.push(vec![
                t.trip_id.clone(),
                t.language.clone(),
                t.start_time.to_string(),
                t.duration.to_string(),
                t.events.len().to_string(),
                t.visited_objects().len().to_string(),
                t.group_size.to_string(),
                num(t.flagged_fraction),
            ]);
        }
        let body = Body {
            config: &self.loaded.config.ingest,
            cleaning: &cleaning,
            languages,
            group_sizes,
        };
        self.out.report("ingest", &body)?;
        self.out.table("trips.csv", &table)?;
        let mut buf = Vec::new();
        write_trips_jsonl(&trips, &mut buf)?;
        self.out.write_bytes("trips.jsonl", &buf)?;
        Ok(trips)
    }

    pub fn cluster(&mut self, trips: &[CleanTrip]) -> Result<()> {
        let stops: BTreeSet<String> = self.museum.tours.iter().flat_map(|t| t.stops.iter().cloned()).collect();
        let cfg = &self.loaded.config.segmentation;
        let (solution, dendro): (ClusterSolution, _) =
            segment_trips(trips, &stops, cfg).context("segmentation failed")?;

        #[derive(Serialize)]
        struct Body<'a> {
            trips: usize,
            clustered: usize,
            #[serde(flatten)]
            solution: &'a ClusterSolution,
        }
        self.out.report(
            "cluster",
            &Body {
                trips: trips.len(),
                clustered: solution.assignment.len(),
                solution: &solution,
            },
        )?;

        let mut sil = Table::new(&["k", "mean_silhouette"]);
        for (k, s) in &solution.silhouette_by_k {
            sil.push(vec![k.to_string(), num(*s)]);
        }
        self.out.table("silhouette_by_k.csv", &sil)?;
        self.out
            .table("cluster_profiles.csv", &profile_table(&solution.profiles))?;

        let mut assign = Table::new(&["trip_id", "label"]);
        for (id, l) in &solution.assignment {
            assign.push(vec![id.clone(), l.to_string()]);
        }
        self.out.table("cluster_assignments.csv", &assign)?;

        let mut merges = Table::new(&["step", "left", "right", "height", "size"]);
        for (i, m) in dendro.merges.iter().enumerate() {
            merges.push(vec![
                i.to_string(),
                m.left.to_string(),
                m.right.to_string(),
                num(m.height),
                m.size.to_string(),
            ]);
        }
        self.out.table("dendrogram.csv", &merges)?;
        Ok(())
    }

    pub fn flow(&mut self, trips: &[CleanTrip]) -> Result<()> {
        let cfg = &self.loaded.config.flow;
        let graph = &self.museum.graph;
        let entrance = graph.entrance().to_string();
        let model: TransitionModel = build_transition_model(trips, graph);
        let restart = cfg.restart.clone().unwrap_or_else(|| entrance.clone());
        let pagerank = flow_pagerank(&model, cfg.damping, &restart, cfg.max_iterations, cfg.tolerance)
            .context("pagerank failed")?;
        let fit = fit_stair_penalty(&model, graph, &entrance, &cfg.grid).context("stair-penalty fit failed")?;
        let popularity =
            popularity_distance_fit(&model, graph, &fit.params, &entrance).context("popularity fit failed")?;
        let boundaries = match &cfg.boundaries {
            Some(b) => b.clone(),
            None => graph
                .edges()
                .iter()
                .filter(|e| e.kind == EdgeKind::StairUp)
                .map(|e| (e.from.clone(), e.to.clone()))
                .collect(),
        };
        let dropoff = dropoff_rates(&model, &boundaries).context("drop-off failed")?;

        #[derive(Serialize)]
        struct Body<'a> {
            trips: usize,
            entrance: &'a str,
            transitions: &'a TransitionModel,
            pagerank: &'a PageRank<f64>,
            stair_fit: &'a PenaltyFit<f64>,
            popularity: &'a PopularityReport,
            dropoff: &'a [Dropoff],
        }
        self.out.report(
            "flow",
            &Body {
                trips: trips.len(),
                entrance: &entrance,
                transitions: &model,
                pagerank: &pagerank,
                stair_fit: &fit,
                popularity: &popularity,
                dropoff: &dropoff,
            },
        )?;

        let mut pop = Table::new(&[
            "room_id", "theme", "distance", "visits", "residual", "outlier", "pagerank",
        ]);
        for r in &popularity.rooms {
            pop.push(vec![
                r.room_id.clone(),
                r.theme.clone(),
                num(r.distance),
                r.visits.to_string(),
                num(r.residual),
                r.outlier.to_string(),
                opt(pagerank.scores.get(&r.room_id).copied()),
            ]);
        }
        self.out.table("popularity_distance.csv", &pop)?;

        let mut tr = Table::new(&["from", "to", "count", "probability"]);
        for (i, row) in model.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    tr.push(vec![
                        model.rooms[i].clone(),
                        model.rooms[j].clone(),
                        c.to_string(),
                        num(model.probs[i][j]),
                    ]);
                }
            }
        }
        self.out.table("transitions.csv", &tr)?;

        let mut dr = Table::new(&["from", "to", "reached", "continued", "rate"]);
        for d in &dropoff {
            dr.push(vec![
                d.from.clone(),
                d.to.clone(),
                d.reached.to_string(),
                d.continued.to_string(),
                opt(d.rate),
            ]);
        }
        self.out.table("dropoff.csv", &dr)?;
        Ok(())
    }

    pub fn tours(&mut self, trips: &[CleanTrip]) -> Result<()> {
        let sessions = match_tour_sessions(trips, &self.museum.tours);
        let report = tour_report(&sessions, &self.museum.tours);

        #[derive(Serialize)]
        struct Body<'a> {
            trips: usize,
            #[serde(flatten)]
            report: &'a TourReport,
        }
        self.out.report(
            "tours",
            &Body {
                trips: trips.len(),
                report: &report,
            },
        )?;

        let lang = |l: &Option<String>| l.clone().unwrap_or_else(|| "all".to_string());
        let mut surv = Table::new(&["tour_id", "language", "stop", "survival"]);
        let mut summary = Table::new(&[
            "tour_id",
            "language",
            "trips",
            "starters",
            "completed",
            "partial",
            "none",
            "completed_rate",
            "partial_rate",
            "entropy",
            "chain_completion",
        ]);
        for s in &report.slices {
            if let Some(curve) = &s.survival {
                for (i, v) in curve.iter().enumerate() {
                    surv.push(vec![s.tour_id.clone(), lang(&s.language), (i + 1).to_string(), num(*v)]);
                }
            }
            summary.push(vec![
                s.tour_id.clone(),
                lang(&s.language),
                s.trips.to_string(),
                s.starters.to_string(),
                s.completed.to_string(),
                s.partial.to_string(),
                s.none.to_string(),
                num(s.completed_rate),
                num(s.partial_rate),
                opt(s.entropy),
                opt(s.chain_completion),
            ]);
        }
        self.out.table("tour_survival.csv", &surv)?;
        self.out.table("tour_summary.csv", &summary)?;
        Ok(())
    }

    pub fn sentiment(&mut self) -> Result<()> {
        let cfg = &self.loaded.config.sentiment;
        let bytes = self.reviews.as_ref().expect("reviews loaded");
        let parsed = parse_reviews(bytes.as_slice())?;
        let records = parsed.reviews.len() + parsed.malformed;
        if records > 0 && parsed.malformed as f64 > cfg.max_malformed_fraction * records as f64 {
            return Err(CliError::ReviewsRejected {
                malformed: parsed.malformed,
                records,
            }
            .into());
        }
        let reviews = parsed.reviews;
        let scores = score_all(&reviews, &self.lexicon);
        let aggregates: Vec<AggregateTable> = cfg
            .group_keys
            .iter()
            .map(|&k| aggregate_by_group(&reviews, &scores, k))
            .collect();
        let lag = rating_lag_analysis(&reviews);
        let length = length_positivity(&reviews, &scores).ok();
        let terms = tfidf_terms(&reviews, cfg.terms_key, cfg.top_terms).unwrap_or_default();

        #[derive(Serialize)]
        struct Body<'a> {
            reviews: usize,
            malformed: usize,
            lexicon: &'a str,
            lexicon_size: usize,
            aggregates: &'a [AggregateTable],
            rating_lag: &'a LagTable,
            lag_drift: Option<f64>,
            length_positivity: Option<&'a LengthPositivity>,
            terms_key: galleryflow::text::GroupKey,
            terms: &'a [GroupTerms],
        }
        self.out.report(
            "sentiment",
            &Body {
                reviews: reviews.len(),
                malformed: parsed.malformed,
                lexicon: &self.lexicon.name,
                lexicon_size: self.lexicon.len(),
                aggregates: &aggregates,
                rating_lag: &lag,
                lag_drift: lag.drift(),
                length_positivity: length.as_ref(),
                terms_key: cfg.terms_key,
                terms: &terms,
            },
        )?;

        let mut groups = Table::new(&[
            "key",
            "group",
            "n",
            "mean_rating",
            "sd_rating",
            "ci_half_width",
            "mean_polarity",
            "low_confidence",
        ]);
        for t in &aggregates {
            let key = serde_json::to_value(t.key)?;
            let key = key.as_str().unwrap_or_default().to_string();
            for g in &t.groups {
                groups.push(vec![
                    key.clone(),
                    g.group.clone(),
                    g.n.to_string(),
                    num(g.mean_rating),
                    opt(g.sd_rating),
                    opt(g.ci_half_width),
                    num(g.mean_polarity),
                    g.low_confidence.to_string(),
                ]);
            }
        }
        self.out.table("group_ratings.csv", &groups)?;

        let mut lag_t = Table::new(&["bin", "min_days", "max_days", "n", "mean_rating"]);
        for b in &lag.bins {
            lag_t.push(vec![
                b.label.clone(),
                b.min_days.to_string(),
                b.max_days.map(|d| d.to_string()).unwrap_or_default(),
                b.n.to_string(),
                num(b.mean_rating),
            ]);
        }
        self.out.table("rating_lag.csv", &lag_t)?;

        let mut terms_t = Table::new(&["group", "rank", "term", "score"]);
        for g in &terms {
            for (i, (term, score)) in g.terms.iter().enumerate() {
                terms_t.push(vec![g.group.clone(), (i + 1).to_string(), term.clone(), num(*score)]);
            }
        }
        self.out.table("top_terms.csv", &terms_t)?;
        Ok(())
    }

    /// Generates a labelled corpus plus a config that runs the pipeline on it.
    pub fn synth(&mut self) -> Result<()> {
        let cfg: &GenConfig = &self.loaded.config.synth;
        let trips = generate_trips(&self.museum, cfg).context("trip generation failed")?;
        let reviews = generate_reviews(cfg).context("review generation failed")?;

        let mut buf = Vec::new();
        galleryflow::ingest::write_events_jsonl(&trips.events, &mut buf)?;
        self.out.write_bytes("events.jsonl", &buf)?;
        buf.clear();
        write_reviews_jsonl(&mut buf, &reviews)?;
        self.out.write_bytes("reviews.jsonl", &buf)?;
        buf.clear();
        write_labels_jsonl(&mut buf, &trips.labels)?;
        self.out.write_bytes("labels.jsonl", &buf)?;

        let mut archetypes: BTreeMap<&str, usize> = BTreeMap::new();
        for l in &trips.labels {
            *archetypes.entry(l.archetype.as_str()).or_insert(0) += 1;
        }

        #[derive(Serialize)]
        struct Body<'a> {
            config: &'a GenConfig,
            trips: usize,
            events: usize,
            reviews: usize,
            archetypes: BTreeMap<&'a str, usize>,
        }
        self.out.report(
            "synth",
            &Body {
                config: cfg,
                trips: trips.labels.len(),
                events: trips.events.len(),
                reviews: reviews.len(),
                archetypes,
            },
        )?;

        let museum_line = match &self.museum_path {
            Some(p) => format!("museum = {}\n", toml_string(&absolute(p)?)),
            None => String::new(),
        };
        let pipeline = format!(
            "[paths]\nevents = \"events.jsonl\"\nreviews = \"reviews.jsonl\"\n{museum_line}outdir = \"report\"\n"
        );
        self.out.write_bytes("pipeline.toml", pipeline.as_bytes())?;
        Ok(())
    }
}

fn profile_table(profiles: &[ClusterProfile]) -> Table {
    let mut t = Table::new(&[
        "label",
        "archetype",
        "size",
        "share",
        "median_duration",
        "median_objects",
        "median_time_per_object",
        "tour_stop_share",
    ]);
    for p in profiles {
        t.push(vec![
            p.label.to_string(),
            p.archetype.to_string(),
            p.size.to_string(),
            num(p.share),
            num(p.median_duration),
            num(p.median_objects),
            num(p.median_time_per_object),
            num(p.tour_stop_share),
        ]);
    }
    t
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("cannot resolve {}", p.display()))
}

fn toml_string(p: &Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}
