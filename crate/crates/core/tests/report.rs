use mcfusion::datagen::{self, DatasetKind, DriftSchedule, TimeDirection};
use mcfusion::detect::Transition;
use mcfusion::fusion::FusionConfig;
use mcfusion::pipeline::{analyze_series, Method, RunConfig, RunOutput};
use mcfusion::report::{self, Line};

fn run() -> RunOutput {
    let schedule = DriftSchedule { steps: 12, points: 150, transition_start: 4, transition_end: 9, ..DriftSchedule::new(DatasetKind::MovingOverlap, TimeDirection::Forward) };
    let panels = datagen::series(&schedule, 3).unwrap();
    let mut cfg = RunConfig::default();
    cfg.fusion = FusionConfig { k_max: 3, ..FusionConfig::default() };
    cfg.em.restarts = 1;
    cfg.transition = Some(Transition { start: 4, end: 9 });
    analyze_series(&panels, &cfg).unwrap()
}

#[test]
fn tables_have_one_row_per_entry() {
    let out = run();
    let scores = report::scores_csv(&out);
    assert_eq!(scores.lines().count(), 1 + out.len() * Method::ALL.len());
    assert_eq!(scores.lines().next(), Some("t,method,value"));
    let post = report::posteriors_csv(&out);
    assert_eq!(post.lines().count(), 1 + out.len() * 3);
    let alarms = report::alarms_csv(&out);
    assert_eq!(alarms.lines().count(), 1 + out.alarms.values().map(Vec::len).sum::<usize>());
    assert_eq!(report::eval_csv(&out).lines().count(), 1 + Method::ALL.len());
}

#[test]
fn emitted_report_is_complete_and_svgs_parse() {
    let out = run();
    let dir = tempfile::tempdir().unwrap();
    let files = report::emit_report(&out, dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["scores.csv", "posteriors.csv", "alarms.csv", "eval.csv", "exp_mc.svg", "exp_mc_fusion.svg", "ddim.svg", "k.svg", "report.md"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
    for p in files.iter().filter(|p| p.extension().is_some_and(|e| e == "svg")) {
        let text = std::fs::read_to_string(p).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));
    }
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("exp_mc.svg"));
}

#[test]
fn plot_text_is_escaped() {
    let line = Line { label: "a<b & \"c\"", color: "red", values: vec![1.0, f64::NAN, 2.0], markers: vec![1, 2, 9] };
    let svg = report::line_plot_svg("x > y", &[line], None);
    roxmltree::Document::parse(&svg).unwrap();
    let empty = report::line_plot_svg("nothing", &[], Some(Transition { start: 2, end: 3 }));
    roxmltree::Document::parse(&empty).unwrap();
}
