use proptest::prelude::*;

use super::*;
use crate::analysis::analyze;
use crate::lang::parse;

fn monitor(src: &str) -> Monitor {
    Monitor::new(analyze(&parse(src).unwrap()).unwrap_or_else(|e| panic!("{e}")), Timestamp::ZERO)
}

fn feed(m: &mut Monitor, ms: u64, pairs: &[(&str, Value)]) -> Vec<Verdict> {
    let e = Event::from_pairs(m.spec(), Timestamp::from_millis(ms), pairs).unwrap();
    m.accept_event(&e).unwrap()
}

const ALTITUDE: &str = "input altitude: Float
output average_alt @1Hz := altitude.aggregate(over: 60s, using: avg).defaults(to: 0.0)
trigger average_alt > 300.0";

const WATCHDOG: &str = "input lost_connection_to_master: Bool
input switch_to_secondary: Bool
input both_rc_disconnected: Bool
output main_fallback_valid_dyn
    spawn when lost_connection_to_master
    close when switch_to_secondary or both_rc_disconnected
    eval @200ms with false
output main_fallback_valid @true := main_fallback_valid_dyn.hold(or: true)
trigger not main_fallback_valid_dyn \"no fallback within 200ms\"";

const SEQ: &str = "input seq_number: Int64
output valid_seq_number := seq_number == seq_number.offset(by: -1, or: -1) + 1
trigger not valid_seq_number \"sequence number skipped\"";

fn watchdog_event(lost: bool, switch: bool, both: bool) -> [(&'static str, Value); 3] {
    [
        ("lost_connection_to_master", Value::Bool(lost)),
        ("switch_to_secondary", Value::Bool(switch)),
        ("both_rc_disconnected", Value::Bool(both)),
    ]
}

#[test]
fn first_deadline_is_one_period_after_start() {
    let m = monitor(ALTITUDE);
    assert_eq!(m.next_deadline(), Some(Timestamp::from_secs(1)));
    let m = monitor(SEQ);
    assert_eq!(m.next_deadline(), None);
    assert_eq!(m.footprint().scheduled, 0);
}

#[test]
fn altitude_average_fires_at_every_deadline() {
    let mut m = monitor(ALTITUDE);
    let mut verdicts = Vec::new();
    for k in 1..=50 {
        verdicts.extend(feed(&mut m, k * 100, &[("altitude", Value::Float64(400.0))]));
    }
    let deadlines: Vec<&Verdict> = verdicts.iter().filter(|v| v.kind == CycleKind::Deadline).collect();
    // deadlines at whole seconds merge into the event cycle at the same instant
    assert!(deadlines.is_empty());
    let merged: Vec<&Verdict> = verdicts.iter().filter(|v| v.update("average_alt").is_some()).collect();
    assert_eq!(merged.len(), 5);
    for v in merged {
        assert_eq!(v.update("average_alt"), Some(Value::Float64(400.0)));
        assert!(v.fired(0));
    }
}

#[test]
fn defaults_apply_to_an_empty_window() {
    let mut m = monitor(ALTITUDE);
    let vs = m.advance_time(Timestamp::from_secs(2)).unwrap();
    assert_eq!(vs.len(), 2);
    for (k, v) in vs.iter().enumerate() {
        assert_eq!(v.time, Timestamp::from_secs(k as u64 + 1));
        assert_eq!(v.kind, CycleKind::Deadline);
        assert_eq!(v.update("average_alt"), Some(Value::Float64(0.0)));
        assert!(v.triggers.is_empty());
    }
    assert!(m.advance_time(Timestamp::from_secs(2)).unwrap().is_empty());
}

#[test]
fn deadlines_before_an_event_run_first() {
    let mut m = monitor(ALTITUDE);
    let vs = feed(&mut m, 3500, &[("altitude", Value::Float64(100.0))]);
    let kinds: Vec<(u64, CycleKind)> = vs.iter().map(|v| (v.time.nanos() / 1_000_000, v.kind)).collect();
    assert_eq!(
        kinds,
        vec![(1000, CycleKind::Deadline), (2000, CycleKind::Deadline), (3000, CycleKind::Deadline), (3500, CycleKind::Event)]
    );
}

#[test]
fn filter_selects_the_rotor() {
    let mut m = monitor(
        "constant ROTOR_1: UInt8 := 1
         constant ROTOR_2: UInt8 := 2
         input rpm: Int64
         input src: UInt8
         output rpm_1 eval when src == ROTOR_1 with abs(rpm)
         output rpm_2 eval when src == ROTOR_2 with abs(rpm)",
    );
    let vs = feed(&mut m, 0, &[("rpm", Value::Int64(-500)), ("src", Value::UInt8(1))]);
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].updates, vec![(Arc::from("rpm_1"), Value::Int64(500))]);
}

#[test]
fn time_regression_leaves_state_unchanged() {
    let mut m = monitor(SEQ);
    feed(&mut m, 10, &[("seq_number", Value::Int64(1))]);
    let before = format!("{m:?}");
    let e = Event::from_pairs(m.spec(), Timestamp::from_millis(5), &[("seq_number", Value::Int64(2))]).unwrap();
    assert!(matches!(m.accept_event(&e), Err(MonitorError::TimeRegression { .. })));
    assert!(matches!(m.advance_time(Timestamp::from_millis(9)), Err(MonitorError::TimeRegression { .. })));
    assert_eq!(format!("{m:?}"), before);
}

#[test]
fn invalid_events_are_rejected() {
    let mut m = monitor(SEQ);
    assert!(matches!(
        Event::from_pairs(m.spec(), Timestamp::ZERO, &[("nope", Value::Int64(1))]),
        Err(MonitorError::UnknownStream(_))
    ));
    let e = Event::from_pairs(m.spec(), Timestamp::ZERO, &[("seq_number", Value::Float64(1.0))]).unwrap();
    assert!(matches!(m.accept_event(&e), Err(MonitorError::TypeMismatch { .. })));
    assert_eq!(m.accept_event(&Event::new(Timestamp::ZERO, 1)), Err(MonitorError::EmptyEvent));
    assert!(matches!(m.accept_event(&Event::new(Timestamp::ZERO, 2)), Err(MonitorError::InputCount { .. })));
}

#[test]
fn sequence_numbers() {
    let mut m = monitor(SEQ);
    let results: Vec<bool> = [1, 2, 3, 5, 6]
        .into_iter()
        .enumerate()
        .map(|(k, s)| feed(&mut m, k as u64, &[("seq_number", Value::Int64(s))])[0].fired(0))
        .collect();
    assert_eq!(results, vec![true, false, false, true, false]);
    let mut m = monitor(SEQ);
    let first = feed(&mut m, 0, &[("seq_number", Value::Int64(0))]);
    assert_eq!(first[0].update("valid_seq_number"), Some(Value::Bool(true)));
}

#[test]
fn watchdog_closed_in_time() {
    let mut m = monitor(WATCHDOG);
    assert!(!m.exists(0));
    assert_eq!(m.next_deadline(), None);
    feed(&mut m, 0, &watchdog_event(true, false, false));
    assert!(m.exists(0));
    assert_eq!(m.next_deadline(), Some(Timestamp::from_millis(200)));
    let vs = feed(&mut m, 100, &watchdog_event(true, true, false));
    assert!(!m.exists(0));
    assert_eq!(vs[0].update("main_fallback_valid"), Some(Value::Bool(true)));
    assert!(m.advance_time(Timestamp::from_secs(1)).unwrap().is_empty());
}

#[test]
fn watchdog_fires_without_fallback() {
    let mut m = monitor(WATCHDOG);
    feed(&mut m, 0, &watchdog_event(true, false, false));
    let vs = m.advance_time(Timestamp::from_millis(200)).unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].update("main_fallback_valid_dyn"), Some(Value::Bool(false)));
    assert_eq!(&*vs[0].triggers[0].message, "no fallback within 200ms");
    let vs = feed(&mut m, 250, &watchdog_event(true, false, false));
    assert_eq!(vs[0].update("main_fallback_valid"), Some(Value::Bool(false)));
}

#[test]
fn close_at_the_deadline_wins() {
    let mut m = monitor(WATCHDOG);
    feed(&mut m, 0, &watchdog_event(true, false, false));
    let vs = feed(&mut m, 200, &watchdog_event(false, false, true));
    assert_eq!(vs.len(), 1);
    assert!(vs[0].triggers.is_empty());
    assert_eq!(vs[0].update("main_fallback_valid_dyn"), None);
}

#[test]
fn spawn_while_existing_is_a_no_op() {
    let mut m = monitor(WATCHDOG);
    feed(&mut m, 0, &watchdog_event(true, false, false));
    feed(&mut m, 150, &watchdog_event(true, false, false));
    assert_eq!(m.next_deadline(), Some(Timestamp::from_millis(200)));
}

#[test]
fn equal_timestamps_are_separate_cycles() {
    let mut m = monitor(ALTITUDE);
    let a = feed(&mut m, 1000, &[("altitude", Value::Float64(400.0))]);
    let b = feed(&mut m, 1000, &[("altitude", Value::Float64(200.0))]);
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].update("average_alt"), Some(Value::Float64(400.0)));
    assert_eq!(b.len(), 1);
    assert_eq!(b[0].update("average_alt"), None);
}

#[test]
fn offsets_skip_the_current_value() {
    let mut m = monitor(
        "input x: Int64
         output count @true := count.offset(by: -1, or: 0) + 1
         output prev := x.offset(by: -2, or: 0)",
    );
    let counts: Vec<(Option<Value>, Option<Value>)> = (1..=4)
        .map(|k| {
            let v = &feed(&mut m, k, &[("x", Value::Int64(k as i64 * 10))])[0];
            (v.update("count"), v.update("prev"))
        })
        .collect();
    assert_eq!(
        counts,
        vec![
            (Some(Value::Int64(1)), Some(Value::Int64(0))),
            (Some(Value::Int64(2)), Some(Value::Int64(0))),
            (Some(Value::Int64(3)), Some(Value::Int64(10))),
            (Some(Value::Int64(4)), Some(Value::Int64(20))),
        ]
    );
    assert_eq!(m.footprint().stream_values, 3 + 2 + 1);
}

#[test]
fn runtime_fault_poisons_the_monitor() {
    let mut m = monitor(
        "input x: Int64
         output q := 10 / x",
    );
    feed(&mut m, 0, &[("x", Value::Int64(2))]);
    let e = Event::from_pairs(m.spec(), Timestamp::from_millis(1), &[("x", Value::Int64(0))]).unwrap();
    match m.accept_event(&e) {
        Err(MonitorError::Fault { location, .. }) => assert_eq!(location, "q"),
        other => panic!("expected a fault, got {other:?}"),
    }
    let e = Event::from_pairs(m.spec(), Timestamp::from_millis(2), &[("x", Value::Int64(1))]).unwrap();
    assert!(matches!(m.accept_event(&e), Err(MonitorError::Poisoned(_))));
}

#[test]
fn nan_in_a_trigger_is_flagged() {
    let mut m = monitor("input x: Float\ntrigger x > 1.0");
    let vs = feed(&mut m, 0, &[("x", Value::Float64(f64::NAN))]);
    assert!(vs[0].triggers.is_empty());
    assert_eq!(vs[0].warnings.len(), 1);
    let vs = feed(&mut m, 1, &[("x", Value::Float64(2.0))]);
    assert!(vs[0].warnings.is_empty());
}

#[test]
fn closing_clears_held_values() {
    let mut m = monitor(
        "input on: Bool
         input v: Int64
         output live spawn when on close when not on eval with v
         output last @true := live.hold(or: -1)",
    );
    let ev = |on, v| [("on", Value::Bool(on)), ("v", Value::Int64(v))];
    let vs = feed(&mut m, 0, &ev(true, 7));
    assert_eq!(vs[0].update("live"), Some(Value::Int64(7)));
    assert_eq!(vs[0].update("last"), Some(Value::Int64(7)));
    let vs = feed(&mut m, 1, &ev(false, 8));
    assert_eq!(vs[0].update("live"), None);
    assert_eq!(vs[0].update("last"), Some(Value::Int64(-1)));
}

fn run_trace(src: &str, trace: &[(u64, f64)]) -> Vec<Verdict> {
    let mut m = monitor(src);
    let mut out = Vec::new();
    for &(ms, x) in trace {
        out.extend(feed(&mut m, ms, &[("x", Value::Float64(x))]));
    }
    out
}

proptest! {
    #[test]
    fn windows_match_brute_force(
        steps in prop::collection::vec((0u64..400, -1e3f64..1e3), 1..60),
        dur_ms in 1u64..2000,
    ) {
        let src = format!(
            "input x: Float
             output s @true := x.aggregate(over: {dur_ms}ms, using: sum)
             output c @true := x.aggregate(over: {dur_ms}ms, using: count)
             output lo @true := x.aggregate(over: {dur_ms}ms, using: min, or: 0.0)
             output hi @true := x.aggregate(over: {dur_ms}ms, using: max, or: 0.0)
             output a @true := x.aggregate(over: {dur_ms}ms, using: avg, or: 0.0)"
        );
        let mut t = 0;
        let trace: Vec<(u64, f64)> = steps.iter().map(|&(dt, x)| { t += dt; (t, x) }).collect();
        let verdicts = run_trace(&src, &trace);
        prop_assert_eq!(verdicts.len(), trace.len());
        for (k, v) in verdicts.iter().enumerate() {
            let now = trace[k].0;
            let inside: Vec<f64> = trace[..=k].iter().filter(|&&(ts, _)| ts + dur_ms > now).map(|&(_, x)| x).collect();
            let mut exact = inside.clone();
            let sum = {
                // oracle: sort by magnitude and sum in extended precision via pairwise error-free transform
                exact.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
                let (mut s, mut comp) = (0.0f64, 0.0f64);
                for x in exact {
                    let y = s + x;
                    let bb = y - s;
                    comp += (s - (y - bb)) + (x - bb);
                    s = y;
                }
                s + comp
            };
            prop_assert_eq!(v.update("c"), Some(Value::UInt64(inside.len() as u64)));
            let Some(Value::Float64(s)) = v.update("s") else { panic!() };
            prop_assert!((s - sum).abs() <= 1e-9 * sum.abs().max(1.0));
            let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(v.update("lo"), Some(Value::Float64(lo)));
            prop_assert_eq!(v.update("hi"), Some(Value::Float64(hi)));
            let Some(Value::Float64(a)) = v.update("a") else { panic!() };
            let avg = sum / inside.len() as f64;
            prop_assert!((a - avg).abs() <= 1e-9 * avg.abs().max(1.0));
        }
    }

    #[test]
    fn replay_is_deterministic(steps in prop::collection::vec((0u64..700, -10f64..500.0), 1..40)) {
        let mut t = 0;
        let trace: Vec<(u64, f64)> = steps.iter().map(|&(dt, x)| { t += dt; (t, x) }).collect();
        let src = ALTITUDE.replace("altitude", "x");
        let a = run_trace(&src, &trace);
        let b = run_trace(&src, &trace);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        for w in a.windows(2) {
            prop_assert!(w[0].time <= w[1].time);
            if w[0].kind == CycleKind::Deadline && w[1].kind == CycleKind::Deadline {
                prop_assert!(w[0].time < w[1].time);
            }
        }
    }
}
