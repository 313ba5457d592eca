use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::adapter::{
    EventFactory, EventSource, FieldMapping, Health, InputSchema, MappingConfig, MappingError, SourceItem, SourceSchema, TimeMode, VerdictEncoder,
    VerdictFormat,
};
use crate::analysis::TypedSpecification;
use crate::engine::{Event, Footprint, Monitor, MonitorError, Verdict};
use crate::time::Timestamp;

/// How often the engine loop checks the stop flag while waiting.
const POLL: Duration = Duration::from_millis(100);

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub time_mode: TimeMode,
    /// Data mode only: data seconds per wall second; 0 replays without delay.
    pub speed: f64,
    /// Bound of the queue between the source thread and the engine.
    pub queue: usize,
    pub format: VerdictFormat,
    /// Setting this ends the run after the current item.
    pub stop: Arc<AtomicBool>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            time_mode: TimeMode::Data,
            speed: 0.0,
            queue: 1024,
            format: VerdictFormat::Ndjson,
            stop: Arc::new(AtomicBool::new(false)),
        }
    }
}

/// Counters of one run. Reproducible in data mode.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Summary {
    pub events: u64,
    pub verdicts: u64,
    pub triggers_fired: u64,
    pub records_skipped: u64,
    pub malformed: u64,
    pub conversion_errors: u64,
    pub warnings: u64,
    pub transport_error: Option<String>,
    pub fault: Option<String>,
    pub interrupted: bool,
    /// Componentwise maximum over the run.
    pub peak_footprint: Footprint,
}

impl Summary {
    pub fn errors(&self) -> u64 {
        self.malformed + self.conversion_errors + u64::from(self.transport_error.is_some()) + u64::from(self.fault.is_some())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "events: {}, verdicts: {}, triggers fired: {}, records skipped: {}, malformed records: {}, conversion errors: {}, warnings: {}",
            self.events, self.verdicts, self.triggers_fired, self.records_skipped, self.malformed, self.conversion_errors, self.warnings
        )?;
        if let Some(e) = &self.transport_error {
            write!(f, "\ntransport failure: {e}")?;
        }
        if let Some(e) = &self.fault {
            write!(f, "\nmonitor fault: {e}")?;
        }
        if self.interrupted {
            f.write_str("\ninterrupted")?;
        }
        Ok(())
    }
}

enum Msg {
    Item(SourceItem, Instant),
    Failed(String),
}

/// One source, one factory, one monitor, one sink.
pub struct Pipeline {
    spec: TypedSpecification,
    factory: EventFactory,
    encoder: VerdictEncoder,
    options: PipelineOptions,
}

impl Pipeline {
    /// Validates the mapping of `schema` onto the specification's inputs.
    pub fn new(spec: TypedSpecification, schema: &SourceSchema, config: &MappingConfig, options: PipelineOptions) -> Result<Pipeline, MappingError> {
        let factory = EventFactory::new(schema, &InputSchema::of(&spec), config, options.time_mode)?;
        Ok(Pipeline::with_factory(spec, factory, options))
    }

    pub fn with_factory(spec: TypedSpecification, factory: EventFactory, options: PipelineOptions) -> Pipeline {
        let encoder = VerdictEncoder::new(&spec, options.format);
        Pipeline { spec, factory, encoder, options }
    }

    pub fn mapping(&self) -> &FieldMapping {
        self.factory.mapping()
    }

    /// Runs until end-of-stream, a transport failure, a monitor fault or the
    /// stop flag. Only sink write failures are returned as errors.
    pub fn run(self, source: Box<dyn EventSource>, sink: &mut dyn Write) -> io::Result<Summary> {
        let (tx, rx) = mpsc::sync_channel(self.options.queue.max(1));
        let producer = thread::spawn(move || {
            let mut source = source;
            loop {
                let msg = match source.next_item() {
                    Ok(Some(item)) => Msg::Item(item, Instant::now()),
                    Ok(None) => return,
                    Err(e) => Msg::Failed(e.to_string()),
                };
                let last = matches!(msg, Msg::Failed(_));
                if tx.send(msg).is_err() || last {
                    return;
                }
            }
        });
        let mut run = Run::new(self, sink);
        let result = run.drive(&rx);
        drop(rx);
        // A blocked source (stdin, a quiet socket) must not delay shutdown.
        if producer.is_finished() {
            let _ = producer.join();
        }
        result?;
        run.sink.flush()?;
        Ok(run.finish())
    }
}

struct Run<'a> {
    spec: TypedSpecification,
    factory: EventFactory,
    encoder: VerdictEncoder,
    options: PipelineOptions,
    sink: &'a mut dyn Write,
    monitor: Option<Monitor>,
    summary: Summary,
    wall_start: Instant,
    /// Data time that corresponds to `wall_start` under pacing.
    data_start: Option<Timestamp>,
}

impl<'a> Run<'a> {
    fn new(p: Pipeline, sink: &'a mut dyn Write) -> Run<'a> {
        Run {
            spec: p.spec,
            factory: p.factory,
            encoder: p.encoder,
            options: p.options,
            sink,
            monitor: None,
            summary: Summary::default(),
            wall_start: Instant::now(),
            data_start: None,
        }
    }

    fn finish(mut self) -> Summary {
        self.summary.records_skipped = self.factory.skipped();
        self.summary
    }

    fn realtime(&self) -> bool {
        self.options.time_mode == TimeMode::Realtime
    }

    fn drive(&mut self, rx: &Receiver<Msg>) -> io::Result<()> {
        let header = self.encoder.header();
        self.sink.write_all(header.as_bytes())?;
        if self.realtime() {
            self.monitor = Some(Monitor::new(self.spec.clone(), Timestamp::ZERO));
        }
        loop {
            if self.options.stop.load(Ordering::SeqCst) {
                self.summary.interrupted = true;
                return Ok(());
            }
            let wait = self.wait_budget();
            match rx.recv_timeout(wait) {
                Ok(Msg::Item(item, arrival)) => {
                    if !self.item(item, arrival)? {
                        return Ok(());
                    }
                }
                Ok(Msg::Failed(e)) => {
                    self.health(&e)?;
                    self.summary.transport_error = Some(e);
                    return Ok(());
                }
                Err(RecvTimeoutError::Timeout) => {
                    if self.realtime() {
                        let now = self.elapsed();
                        if !self.advance(now)? {
                            return Ok(());
                        }
                    }
                }
                Err(RecvTimeoutError::Disconnected) => {
                    // sources that watch `stop` end before the loop sees it
                    self.summary.interrupted = self.options.stop.load(Ordering::SeqCst);
                    return Ok(());
                }
            }
        }
    }

    fn elapsed(&self) -> Timestamp {
        Timestamp(u64::try_from(self.wall_start.elapsed().as_nanos()).unwrap_or(u64::MAX))
    }

    /// In realtime mode waits at most until the next deadline.
    fn wait_budget(&self) -> Duration {
        match (&self.monitor, self.realtime()) {
            (Some(m), true) => match m.next_deadline() {
                Some(d) => Duration::from_nanos(d - self.elapsed()).min(POLL),
                None => POLL,
            },
            _ => POLL,
        }
    }

    /// Returns `false` when the run must end.
    fn item(&mut self, item: SourceItem, arrival: Instant) -> io::Result<bool> {
        let record = match item {
            SourceItem::Record(r) => r,
            SourceItem::Malformed(m) => {
                self.summary.malformed += 1;
                self.health(&format!("malformed record: {m}"))?;
                return Ok(true);
            }
            SourceItem::Warning(w) => {
                self.summary.warnings += 1;
                self.health(&w)?;
                return Ok(true);
            }
        };
        let arrival = Timestamp(u64::try_from(arrival.saturating_duration_since(self.wall_start).as_nanos()).unwrap_or(u64::MAX));
        let arrival = self.monitor.as_ref().map_or(arrival, |m| arrival.max(m.last_time()));
        let event = match self.factory.create(&record, arrival) {
            Ok(Some(e)) => e,
            Ok(None) => return Ok(true),
            Err(e) => {
                self.summary.conversion_errors += 1;
                self.health(&format!("record dropped: {e}"))?;
                return Ok(true);
            }
        };
        self.event(&event)
    }

    fn event(&mut self, event: &Event) -> io::Result<bool> {
        if self.monitor.is_none() {
            self.monitor = Some(Monitor::new(self.spec.clone(), event.time));
        }
        if !self.realtime() && self.options.speed > 0.0 {
            // deadlines strictly before the event, each at its paced wall time
            loop {
                let next = self.monitor.as_ref().and_then(Monitor::next_deadline).filter(|&d| d < event.time);
                let Some(d) = next else { break };
                pace(self.wall_start, &mut self.data_start, d, self.options.speed);
                let res = self.monitor.as_mut().expect("monitor exists").advance_time(d);
                if !self.outcome(res)? {
                    return Ok(false);
                }
                if self.options.stop.load(Ordering::SeqCst) {
                    return Ok(true);
                }
            }
            pace(self.wall_start, &mut self.data_start, event.time, self.options.speed);
        }
        let res = self.monitor.as_mut().expect("monitor exists").accept_event(event);
        let ok = self.outcome(res)?;
        if ok {
            self.summary.events += 1;
        }
        Ok(ok)
    }

    fn advance(&mut self, now: Timestamp) -> io::Result<bool> {
        let Some(monitor) = self.monitor.as_mut() else { return Ok(true) };
        if now < monitor.last_time() {
            return Ok(true);
        }
        let res = monitor.advance_time(now);
        self.outcome(res)
    }

    /// Writes verdicts or a health notice. Returns `false` after a fault.
    fn outcome(&mut self, res: Result<Vec<Verdict>, MonitorError>) -> io::Result<bool> {
        match res {
            Ok(vs) => {
                self.verdicts(&vs)?;
                Ok(true)
            }
            Err(MonitorError::Fault { time, location, message, completed }) => {
                self.verdicts(&completed)?;
                let msg = format!("runtime fault at {time}s in `{location}`: {message}");
                self.sink.write_all(self.encoder.encode_health(&Health { time: Some(time), message: msg.clone() }).as_bytes())?;
                self.summary.fault = Some(msg);
                Ok(false)
            }
            Err(MonitorError::Poisoned(m)) => {
                self.summary.fault.get_or_insert(m);
                Ok(false)
            }
            Err(e) => {
                self.summary.conversion_errors += 1;
                self.health(&format!("event rejected: {e}"))?;
                Ok(true)
            }
        }
    }

    fn verdicts(&mut self, vs: &[Verdict]) -> io::Result<()> {
        for v in vs {
            self.summary.verdicts += 1;
            self.summary.triggers_fired += v.triggers.len() as u64;
            self.sink.write_all(self.encoder.encode(v).as_bytes())?;
        }
        if let Some(m) = &self.monitor {
            let f = m.footprint();
            let p = &mut self.summary.peak_footprint;
            p.stream_values = p.stream_values.max(f.stream_values);
            p.window_values = p.window_values.max(f.window_values);
            p.scheduled = p.scheduled.max(f.scheduled);
        }
        Ok(())
    }

    fn health(&mut self, message: &str) -> io::Result<()> {
        let time = self.monitor.as_ref().map(Monitor::last_time);
        self.sink.write_all(self.encoder.encode_health(&Health { time, message: message.to_string() }).as_bytes())
    }
}

/// Sleeps until data time `t` is due on the wall clock at `speed`.
fn pace(wall_start: Instant, data_start: &mut Option<Timestamp>, t: Timestamp, speed: f64) {
    let origin = *data_start.get_or_insert(t);
    let due = wall_start + Duration::from_secs_f64((t - origin) as f64 / 1e9 / speed);
    let now = Instant::now();
    if due > now {
        thread::sleep(due - now);
    }
}
