//! Decimating recorder (1 kHz servo to 100 Hz trace), asynchronous trace
//! sink, and servo-rate replay.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;

use crate::haptic::{HapticScene, ServoOutput, ToolState, SERVO_DT};
use crate::trace::{sample_line, ForceSample, Trace, TraceError, TraceHeader, DECIMATION};

/// Bounded queue between the servo and the file writer. When the writer
/// falls behind, `send` blocks instead of growing memory.
pub struct TraceSink {
    tx: Option<SyncSender<ForceSample>>,
    worker: Option<JoinHandle<Result<(), TraceError>>>,
}

impl TraceSink {
    pub fn create(path: impl AsRef<Path>, header: &TraceHeader, capacity: usize) -> Result<Self, TraceError> {
        let file = File::create(path)?;
        Ok(Self::spawn(BufWriter::new(file), header, capacity))
    }

    pub fn spawn<W: Write + Send + 'static>(mut out: W, header: &TraceHeader, capacity: usize) -> Self {
        let header_line = serde_json::to_string(header).expect("header serializes");
        let (tx, rx) = sync_channel::<ForceSample>(capacity.max(1));
        let worker = std::thread::spawn(move || -> Result<(), TraceError> {
            writeln!(out, "{header_line}")?;
            for sample in rx {
                writeln!(out, "{}", sample_line(&sample))?;
            }
            out.flush()?;
            Ok(())
        });
        Self {
            tx: Some(tx),
            worker: Some(worker),
        }
    }

    pub fn send(&self, sample: ForceSample) -> Result<(), TraceError> {
        let tx = self.tx.as_ref().expect("sink open");
        tx.send(sample).map_err(|_| {
            TraceError::Io(std::io::Error::new(
                std::io::ErrorKind::BrokenPipe,
                "trace writer stopped",
            ))
        })
    }

    /// Drains the queue and waits for the writer.
    pub fn finish(mut self) -> Result<(), TraceError> {
        self.close()
    }

    fn close(&mut self) -> Result<(), TraceError> {
        drop(self.tx.take());
        match self.worker.take() {
            Some(worker) => worker.join().unwrap_or_else(|_| {
                Err(TraceError::Io(std::io::Error::other("trace writer panicked")))
            }),
            None => Ok(()),
        }
    }
}

impl Drop for TraceSink {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

/// Keeps every tenth servo tick.
pub struct Recorder {
    trace: Trace,
    sink: Option<TraceSink>,
}

impl Recorder {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            trace: Trace::new(header),
            sink: None,
        }
    }

    pub fn with_sink(mut self, sink: TraceSink) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn header(&self) -> &TraceHeader {
        &self.trace.header
    }

    /// Offers servo tick `tick`; returns the sample when it was kept.
    pub fn push(
        &mut self,
        tick: u64,
        tool: &ToolState,
        out: &ServoOutput,
    ) -> Result<Option<ForceSample>, TraceError> {
        if tick % DECIMATION != 0 {
            return Ok(None);
        }
        let sample = ForceSample::from_servo(tool, out);
        if let Some(sink) = &self.sink {
            sink.send(sample)?;
        }
        self.trace.samples.push(sample);
        Ok(Some(sample))
    }

    pub fn samples(&self) -> &[ForceSample] {
        &self.trace.samples
    }

    pub fn finish(mut self) -> Result<Trace, TraceError> {
        if let Some(sink) = self.sink.take() {
            sink.finish()?;
        }
        Ok(self.trace)
    }
}

/// Decimates a 1 kHz servo stream; element `k` is servo tick `k`.
pub fn record<'a>(
    header: TraceHeader,
    stream: impl IntoIterator<Item = (&'a ToolState, &'a ServoOutput)>,
) -> Trace {
    let mut recorder = Recorder::new(header);
    for (k, (tool, out)) in stream.into_iter().enumerate() {
        recorder.push(k as u64, tool, out).expect("no sink attached");
    }
    recorder.finish().expect("no sink attached")
}

/// Servo-rate tool states between trace samples: nine interpolated ticks
/// between each pair, and every recorded sample reproduced exactly.
pub fn upsample(samples: &[ForceSample]) -> Vec<ToolState> {
    let mut tools = Vec::with_capacity(samples.len().saturating_sub(1) * DECIMATION as usize + 1);
    for pair in samples.windows(2) {
        let (a, b) = (pair[0].tool_state(), pair[1].tool_state());
        for j in 0..DECIMATION {
            let s = j as f64 / DECIMATION as f64;
            tools.push(ToolState::interpolate(&a, &b, s, a.t + j as f64 * SERVO_DT));
        }
    }
    if let Some(last) = samples.last() {
        tools.push(last.tool_state());
    }
    tools
}

/// Re-runs the servo over an upsampled trace.
pub fn replay(trace: &Trace, scene: &HapticScene) -> Vec<ServoOutput> {
    scene.run(&upsample(&trace.samples))
}
