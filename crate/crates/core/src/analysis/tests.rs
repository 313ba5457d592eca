use std::collections::BTreeSet;

use super::*;
use crate::lang::parse;
use crate::value::ValueType;

fn ok(src: &str) -> TypedSpecification {
    analyze(&parse(src).unwrap()).unwrap_or_else(|e| panic!("{e}"))
}

fn err(src: &str) -> AnalysisError {
    analyze(&parse(src).unwrap()).expect_err("analysis should fail").first().clone()
}

fn stream<'a>(spec: &'a TypedSpecification, name: &str) -> &'a StreamInfo {
    &spec.streams[spec.stream_id(name).unwrap()]
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
output main_fallback_valid @true := main_fallback_valid_dyn.hold(or: true)";

#[test]
fn altitude_listing() {
    let spec = ok(ALTITUDE);
    let avg = stream(&spec, "average_alt");
    assert_eq!(avg.ty, ValueType::Float64);
    assert_eq!(avg.pacing, PacingType::Periodic(1_000_000_000));
    assert_eq!(spec.triggers[0].pacing, PacingType::Periodic(1_000_000_000));
    assert!(spec.triggers[0].layer > avg.layer);
    assert_eq!(&*spec.triggers[0].message, "average_alt > 300.0");
    let report = memory_bounds(&spec);
    let w: Vec<_> = report.windows_over("altitude").collect();
    assert_eq!(w.len(), 1);
    assert_eq!(w[0].duration, 60_000_000_000);
    assert_eq!(report.stream("altitude"), Some(1));
    assert_eq!(spec.to_string().lines().count(), 4, "header plus three rows");
}

#[test]
fn unknown_stream() {
    let e = err("output a := b");
    assert_eq!(e.kind, AnalysisErrorKind::UnknownStream);
    assert_eq!(e.declaration, "a");
}

#[test]
fn watchdog_listing() {
    let spec = ok(WATCHDOG);
    let dyn_ = stream(&spec, "main_fallback_valid_dyn");
    assert_eq!(dyn_.pacing, PacingType::Periodic(200_000_000));
    assert!(dyn_.spawned && dyn_.closable);
    assert_eq!(stream(&spec, "main_fallback_valid").pacing, PacingType::AnyEvent);
    let ir = &spec.outputs[0];
    assert_eq!(ir.spawn.as_ref().unwrap().inputs, BTreeSet::from([0]));
    assert_eq!(ir.close.as_ref().unwrap().inputs, BTreeSet::from([1, 2]));
    assert!(spec.global_periods().is_empty());
}

#[test]
fn flight_phase_rotor_streams() {
    let fpd = "constant ROTOR_1: UInt8 := 1
        constant ROTOR_2: UInt8 := 2
        constant eps_rpm_on: Float64 := 100.0
        input rpm: Int64
        input src: UInt8
        output rpm_1 eval when src == ROTOR_1 with abs(rpm)
        output rpm_2 eval when src == ROTOR_2 with abs(rpm)";
    let spec = ok(fpd);
    assert_eq!(stream(&spec, "rpm_1").pacing, PacingType::EventBased(BTreeSet::from([0, 1])));
    assert_eq!(stream(&spec, "rpm_1").ty, ValueType::Int64);

    let unannotated = format!("{fpd}\noutput rpm_on_check := avg(rpm_1.hold(or: 0), rpm_2.hold(or: 0)) > eps_rpm_on");
    let e = err(&unannotated);
    assert_eq!((e.kind, e.declaration.as_str()), (AnalysisErrorKind::PacingMismatch, "rpm_on_check"));

    let annotated = format!(
        "{fpd}\noutput rpm_on_check @true := avg(rpm_1.hold(or: 0), rpm_2.hold(or: 0)) > eps_rpm_on
         output rpm_on @1s := rpm_on_check.aggregate(over: 1s, using: avg, or: 0.0) > 0.5"
    );
    let spec = ok(&annotated);
    assert_eq!(stream(&spec, "rpm_on_check").pacing, PacingType::AnyEvent);
    assert_eq!(stream(&spec, "rpm_on").ty, ValueType::Bool);
}

#[test]
fn well_formedness() {
    let counter = ok("output a @1Hz := a.offset(by: -1, or: 0) + 1");
    assert_eq!(stream(&counter, "a").memory_bound, 2);

    let e = err("input x: Int64\noutput a := b\noutput b := a");
    assert_eq!(e.kind, AnalysisErrorKind::IllFormedCycle);
    assert!(e.message.contains("`a`") && e.message.contains("`b`"), "{}", e.message);

    let e = err("output x := x + 1");
    assert_eq!(e.kind, AnalysisErrorKind::IllFormedCycle);

    // a cycle through hold is legal
    ok("input i: Int64\noutput a := b.hold(or: 0) + i\noutput b := a + 1");
}

#[test]
fn sequence_number_listing() {
    let spec = ok("input seq_number: Int64\noutput valid_seq_number := seq_number = seq_number.offset(by: -1, or: -1) + 1");
    let v = stream(&spec, "valid_seq_number");
    assert_eq!(v.pacing, PacingType::EventBased(BTreeSet::from([0])));
    assert_eq!(v.layer, 1);
    assert_eq!(stream(&spec, "seq_number").memory_bound, 2);
    assert_eq!(stream(&spec, "valid_seq_number").memory_bound, 1);
}

#[test]
fn typing_rules() {
    let spec = ok("input src: UInt8\noutput y := src + 1\noutput z: UInt8 := cast<UInt8>(src + 1)");
    assert_eq!(stream(&spec, "y").ty, ValueType::UInt64);
    assert_eq!(err("input src: UInt8\noutput z: UInt8 := src + 1").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: Float\noutput b := a + 1").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: Float\ninput b: Int64\noutput c := a > b").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: Bool\noutput c := a < a").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: Float\noutput c @1s := a.aggregate(over: 1s, using: avg)").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: UInt8\noutput c: UInt8 := 300").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: UInt64\noutput c := -a").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("constant K: UInt8 := 256").kind, AnalysisErrorKind::TypeMismatch);
    assert_eq!(err("input a: Bool\ntrigger a + 1").kind, AnalysisErrorKind::TypeMismatch);

    let spec = ok("input a: Bool, b: UInt8, c: Float
        output s @1s := a.aggregate(over: 1s, using: sum)
        output n @1s := c.aggregate(over: 1s, using: count)
        output m @1s := b.aggregate(over: 1s, using: max, or: 0)
        output p @1s := a.aggregate(over: 1s, using: avg, or: 0.0)");
    let tys: Vec<_> = ["s", "n", "m", "p"].iter().map(|n| stream(&spec, n).ty).collect();
    assert_eq!(tys, [ValueType::UInt64, ValueType::UInt64, ValueType::UInt8, ValueType::Float64]);
}

#[test]
fn forward_references_resolve() {
    let spec = ok("input x: Float\noutput a := b * 2.0\noutput b := x + 1.0");
    assert_eq!(stream(&spec, "a").ty, ValueType::Float64);
    assert!(stream(&spec, "a").layer > stream(&spec, "b").layer);
    assert_eq!(stream(&spec, "a").pacing, PacingType::EventBased(BTreeSet::from([0])));
}

#[test]
fn pacing_rules() {
    assert_eq!(err("input a: Int64\noutput b @3Hz := 1").kind, AnalysisErrorKind::PacingMismatch);
    assert_eq!(err("input a: Int64\noutput b @1Hz := a").kind, AnalysisErrorKind::PacingMismatch);
    assert_eq!(err("input a: Int64\noutput b @true := a").kind, AnalysisErrorKind::PacingMismatch);
    assert_eq!(err("input a: Int64\noutput p @1Hz := 1\noutput q := a + p").kind, AnalysisErrorKind::PacingMismatch);
    assert_eq!(err("output p @1Hz := 1\noutput q @2Hz := 2\noutput r := p + q").kind, AnalysisErrorKind::PacingMismatch);
    let spec = ok("input a: Int64, b: Int64\noutput s := a + b\noutput t := s + a\noutput p @1Hz := 1\noutput q @1Hz := p + 1");
    assert_eq!(stream(&spec, "t").pacing, PacingType::EventBased(BTreeSet::from([0, 1])));
    assert_eq!(stream(&spec, "q").pacing, PacingType::Periodic(1_000_000_000));
    assert_eq!(err("input a: Float\noutput w @1s := a.aggregate(over: 0s, using: count)").kind, AnalysisErrorKind::PacingMismatch);
}

#[test]
fn conditional_access_rules() {
    let base = "input a: Int64, k: Bool\noutput f eval when k with a\noutput s spawn when k eval with a";
    assert_eq!(err(&format!("{base}\noutput x := f + 1")).kind, AnalysisErrorKind::SpawnAccessViolation);
    assert_eq!(err(&format!("{base}\noutput x := s")).kind, AnalysisErrorKind::SpawnAccessViolation);
    assert_eq!(err(&format!("{base}\noutput x := f.offset(by: -1, or: 0)")).kind, AnalysisErrorKind::SpawnAccessViolation);
    assert_eq!(err(&format!("{base}\noutput x @1s := s.aggregate(over: 1s, using: count)")).kind, AnalysisErrorKind::SpawnAccessViolation);
    assert_eq!(err(&format!("{base}\ntrigger f > s")).kind, AnalysisErrorKind::SpawnAccessViolation);
    assert_eq!(err("input a: Int64, k: Bool\noutput o := a\noutput s spawn when o > 0 eval with a").kind, AnalysisErrorKind::SpawnAccessViolation);

    let spec = ok(&format!("{base}\noutput x := f.hold(or: 0) + a\noutput w @1s := f.aggregate(over: 1s, using: count)\ntrigger f > 10"));
    assert_eq!(spec.triggers[0].gate, spec.stream_id("f"));

    let spec = ok(&format!("{WATCHDOG}\ntrigger not main_fallback_valid_dyn \"no fallback within 200ms\""));
    assert_eq!(spec.triggers[0].gate, spec.stream_id("main_fallback_valid_dyn"));
    let e = err(&format!("{WATCHDOG}\ntrigger not main_fallback_valid_dyn and main_fallback_valid"));
    assert_eq!(e.kind, AnalysisErrorKind::SpawnAccessViolation);
}

#[test]
fn one_error_per_declaration_in_order() {
    let errs = analyze(&parse("input a: Int64\noutput x := a + 1.0\noutput y := a and true\ntrigger a").unwrap()).unwrap_err();
    assert_eq!(errs.0.len(), 3);
    let decls: Vec<_> = errs.0.iter().map(|e| e.declaration.as_str()).collect();
    assert_eq!(decls, ["x", "y", "trigger #1"]);
}

#[test]
fn analysis_is_deterministic() {
    let src = format!("{WATCHDOG}\n{}", "input seq: Int64\noutput v := seq = seq.offset(by: -1, or: -1) + 1");
    let a = format!("{:?}", analyze(&parse(&src).unwrap()).unwrap());
    let b = format!("{:?}", analyze(&parse(&src).unwrap()).unwrap());
    assert_eq!(a, b);
    let bad = "output a := b\noutput b := a + c";
    assert_eq!(analyze(&parse(bad).unwrap()).unwrap_err(), analyze(&parse(bad).unwrap()).unwrap_err());
}

#[test]
fn evaluation_order_respects_layers() {
    let spec = ok("input x: Int64\noutput c := b + 1\noutput b := a + 1\noutput a := x\ntrigger c > 3\ntrigger x > 0");
    let layers: Vec<u32> = spec
        .order
        .iter()
        .map(|n| match *n {
            Node::Output(i) => spec.output_stream(i).layer,
            Node::Trigger(i) => spec.triggers[i].layer,
        })
        .collect();
    assert!(layers.windows(2).all(|w| w[0] <= w[1]), "{layers:?}");
    assert_eq!(spec.order.first(), Some(&Node::Output(2)));
}
