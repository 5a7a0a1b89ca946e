//! Generated datasets: a small bibliographic graph and a seeded
//! provenance-style event log from a project course.

use std::fmt::Write as _;
use std::io::{self, Write};

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The bibliographic example graph: four papers, two authors, two venues,
/// a citation chain paper2 → paper4 → paper3 → paper1 and the ancestry of
/// paper1.
pub fn biblio() -> String {
    const TEXT: &str = r#"# papers
paper1 @type paper .
paper1 @id p1 .
paper1 @title "Modeling Process Graphs" .
paper1 publishedIn CAiSE .
paper1 authoredBy author1 .
paper2 @type paper .
paper2 @id p2 .
paper2 @title "Graph Indexing Techniques" .
paper2 @year "2008" .
paper2 publishedIn SIGMOD .
paper2 authoredBy author1 .
paper3 @type paper .
paper3 @id p3 .
paper3 @title "Querying SQL Graphs" .
paper3 publishedIn CAiSE .
paper3 authoredBy author2 .
paper4 @type paper .
paper4 @id p4 .
paper4 @title "Mining Citation Networks" .
paper4 @year "2009" .
paper4 publishedIn SIGMOD .
paper4 authoredBy author2 .
# citations
paper2 citedBy paper4 .
paper4 citedBy paper3 .
paper3 citedBy paper1 .
# authors and venues
author1 @type author .
author1 @name "author1" .
author2 @type author .
author2 @name "author2" .
CAiSE @type venue .
SIGMOD @type venue .
# ancestry of paper1
document1 @type document .
paper1 wasDerivedFrom document1 .
document1 wasDerivedFrom file1 .
file1 @type ITEM .
"#;
    TEXT.to_string()
}

/// A chapter with an author who has a web page.
pub fn rdf_sample() -> String {
    r#"chapter1 @type chapter .
chapter1 @title "Querying RDF Data" .
chapter1 author person1 .
person1 @type person .
person1 @name "Olaf" .
person1 @webPage "http://example.org/~olaf" .
chapter2 @type chapter .
chapter2 @title "Storing RDF Data" .
chapter2 author person2 .
person2 @type person .
person2 @webPage "http://example.org/~anne" .
"#
    .to_string()
}

pub const PHASES: [&str; 6] = [
    "brainstorming",
    "requirements",
    "design",
    "prototype",
    "testing",
    "delivery",
];

/// One phase of one semester with its inclusive date range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase {
    pub semester: &'static str,
    pub name: &'static str,
    pub first: NaiveDate,
    pub last: NaiveDate,
}

impl Phase {
    /// `brainstorming09s2`, `design10s1`, ...
    pub fn folder_name(&self) -> String {
        format!("{}{}", self.name, self.semester)
    }
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

/// Semester, year, and the first and last month and day of each phase.
type PhaseRow = (&'static str, i32, [(u32, u32, u32, u32); 6]);

pub fn phases() -> Vec<Phase> {
    let table: [PhaseRow; 2] = [
        (
            "09s2",
            2009,
            [
                (7, 19, 8, 8),
                (8, 9, 8, 29),
                (8, 30, 9, 26),
                (9, 27, 10, 24),
                (10, 25, 11, 14),
                (11, 15, 11, 30),
            ],
        ),
        (
            "10s1",
            2010,
            [
                (3, 1, 3, 21),
                (3, 22, 4, 11),
                (4, 12, 5, 2),
                (5, 3, 5, 30),
                (5, 31, 6, 20),
                (6, 21, 6, 30),
            ],
        ),
    ];
    let mut out = Vec::new();
    for (semester, year, ranges) in table {
        for (name, (m1, d1, m2, d2)) in PHASES.iter().zip(ranges) {
            out.push(Phase {
                semester,
                name,
                first: ymd(year, m1, d1),
                last: ymd(year, m2, d2),
            });
        }
    }
    out
}

pub fn phase(folder_name: &str) -> Option<Phase> {
    phases()
        .into_iter()
        .find(|p| p.folder_name() == folder_name)
}

const ACTIVITIES: [&str; 7] = [
    "create", "update", "comment", "generate", "response", "review", "upload",
];
const ARTIFACTS: [&str; 10] = [
    "brainDoc.doc",
    "designDoc.doc",
    "requirements.doc",
    "wikiPage.html",
    "prototype.zip",
    "testPlan.doc",
    "slides.ppt",
    "report.pdf",
    "schema.sql",
    "minutes.txt",
];
const LAYERS: [&str; 4] = ["Wiki", "Forum", "Repository", "Email"];
const LAYER_PARTS: [&str; 5] = ["bug", "page", "thread", "commit", "message"];
const GROUPS: usize = 15;
const STUDENTS: usize = 60;
const MENTORS: usize = 5;

/// Ids of the planted event chain, start to end.
pub const PLANTED_CHAIN: [&str; 5] = [
    "event_start",
    "event_chain1",
    "event_bug",
    "event_chain2",
    "event_end",
];

struct Event {
    id: String,
    activity: &'static str,
    date: NaiveDate,
    artifact: usize,
    user: usize,
    group: usize,
    layer: &'static str,
    layer_part: &'static str,
    phase: &'static str,
}

fn user_name(u: usize) -> String {
    if u < STUDENTS {
        format!("student{}", u + 1)
    } else {
        format!("mentor{}", u - STUDENTS + 1)
    }
}

fn artifact_id(a: usize) -> String {
    format!("artifact{}", a + 1)
}

fn line(out: &mut String, s: &str, p: &str, o: impl std::fmt::Display) {
    writeln!(out, "{s} {p} {o} .").expect("writing to a String");
}

fn quoted(s: &str) -> String {
    crate::value::Value::string(s).to_string()
}

fn date(d: NaiveDate) -> String {
    format!("\"{}\"^^xsd:date", d.format("%Y-%m-%d"))
}

fn write_event(out: &mut String, e: &Event) {
    line(out, &e.id, "@type", "Event");
    line(out, &e.id, "@activityType", quoted(e.activity));
    line(out, &e.id, "@timestamp", date(e.date));
    line(out, &e.id, "@ArtifactName", quoted(ARTIFACTS[e.artifact]));
    line(out, &e.id, "@artifactName", quoted(ARTIFACTS[e.artifact]));
    line(out, &e.id, "@UseName", quoted(&user_name(e.user)));
    line(
        out,
        &e.id,
        "@UserGroup",
        quoted(&format!("project{}", e.group + 1)),
    );
    line(out, &e.id, "@layer", quoted(e.layer));
    line(out, &e.id, "@layerPart", quoted(e.layer_part));
    line(out, &e.id, "@phase", quoted(e.phase));
    line(out, &e.id, "used", artifact_id(e.artifact));
    line(out, &e.id, "wasControledBy", user_name(e.user));
    if e.activity == "generate" {
        line(out, &artifact_id(e.artifact), "wasGeneratedBy", &e.id);
    }
}

/// Deterministic event log with `count` random events plus a planted chain
/// of five events.
pub fn events(seed: u64, count: usize) -> String {
    let mut out = Vec::new();
    write_events(&mut out, seed, count).expect("writing to memory");
    String::from_utf8(out).expect("fixture text is UTF-8")
}

/// Streams the event log to `w`, so large logs never sit in memory whole.
///
/// Random events are ordered by date and may be triggered by earlier ones.
/// The planted chain `event_start → event_chain1 → event_bug → event_chain2
/// → event_end` (via `wasTriggeredBy`) has no other outgoing edges, and its
/// endpoints are the only project4 events generating `brainDoc.doc` and
/// `designDoc.doc`.
pub fn write_events(w: &mut impl Write, seed: u64, count: usize) -> io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases = phases();
    let days: Vec<(NaiveDate, &'static str)> = phases
        .iter()
        .flat_map(|p| {
            let n = (p.last - p.first).num_days();
            (0..=n).map(move |k| (p.first + Duration::days(k), p.name))
        })
        .collect();
    let users = STUDENTS + MENTORS;

    let mut buf = String::new();
    for (a, name) in ARTIFACTS.iter().enumerate() {
        line(&mut buf, &artifact_id(a), "@type", "Artifact");
        line(&mut buf, &artifact_id(a), "@name", quoted(name));
    }
    for a in 1..ARTIFACTS.len() {
        if rng.gen_bool(0.5) {
            line(
                &mut buf,
                &artifact_id(a),
                "wasDerivedFrom",
                artifact_id(rng.gen_range(0..a)),
            );
        }
    }
    for u in 0..users {
        let name = user_name(u);
        line(&mut buf, &name, "@type", "Agent");
        line(&mut buf, &name, "@name", quoted(&name));
    }
    w.write_all(buf.as_bytes())?;

    let mut dates: Vec<(NaiveDate, &'static str)> = (0..count)
        .map(|_| *days.choose(&mut rng).expect("phase days"))
        .collect();
    dates.sort();
    for (i, (day, phase)) in dates.into_iter().enumerate() {
        let user = rng.gen_range(0..users);
        let group = if user < STUDENTS {
            user / 4
        } else {
            rng.gen_range(0..GROUPS)
        };
        let activity = *ACTIVITIES.choose(&mut rng).expect("activities");
        let mut artifact = rng.gen_range(0..ARTIFACTS.len());
        if activity == "generate" && group == 3 {
            artifact = rng.gen_range(2..ARTIFACTS.len());
        }
        let e = Event {
            id: format!("event{:07}", i + 1),
            activity,
            date: day,
            artifact,
            user,
            group,
            layer: LAYERS.choose(&mut rng).expect("layers"),
            layer_part: LAYER_PARTS.choose(&mut rng).expect("layer parts"),
            phase,
        };
        buf.clear();
        write_event(&mut buf, &e);
        if i > 0 && rng.gen_bool(0.6) {
            let back = rng.gen_range(1..=i.min(50));
            line(
                &mut buf,
                &e.id,
                "wasTriggeredBy",
                format!("event{:07}", i + 1 - back),
            );
        }
        w.write_all(buf.as_bytes())?;
    }

    buf.clear();
    let planted = [
        ("generate", 0, "Repository", "commit", 5),
        ("update", 2, "Repository", "commit", 7),
        ("response", 2, "Wiki", "bug", 9),
        ("update", 2, "Repository", "commit", 11),
        ("generate", 1, "Repository", "commit", 13),
    ];
    for (k, (activity, artifact, layer, layer_part, day)) in planted.into_iter().enumerate() {
        let e = Event {
            id: PLANTED_CHAIN[k].to_string(),
            activity,
            date: ymd(2009, 11, day),
            artifact,
            user: 12,
            group: 3,
            layer,
            layer_part,
            phase: "testing",
        };
        write_event(&mut buf, &e);
        if k + 1 < PLANTED_CHAIN.len() {
            line(&mut buf, &e.id, "wasTriggeredBy", PLANTED_CHAIN[k + 1]);
        }
    }
    w.write_all(buf.as_bytes())
}
