//! Parameter-count reports and inference-throughput measurement.

mod report;
mod throughput;

pub use report::{paper_reference, report, PaperReference, Report, ReportRow, TEACHER_REFERENCE};
pub use throughput::{
    hardware_note, measure_throughput, measure_throughput_raw, median, BatchInference, FixedLatencyModel,
    ThroughputConfig, ThroughputResult,
};
