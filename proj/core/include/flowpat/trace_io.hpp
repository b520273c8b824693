#pragma once

#include <filesystem>

#include "flowpat/envelope.hpp"
#include "flowpat/experiment.hpp"
#include "flowpat/trace.hpp"

namespace flowpat {

// Reads a `time_s,voltage_v` CSV. With calibrate set, voltages are clamped
// to [0, 5] V. Throws DataError with the 1-based line number on a malformed
// row, and an empty-input DataError when no data rows are present.
CapacitanceTrace ingest_csv(const std::filesystem::path& path,
                            double sample_rate_hz = 100.0,
                            bool calibrate = true);

// Writes the canonical trace CSV (UTF-8, LF, header `time_s,voltage_v`).
// Voltages use shortest round-trip formatting so ingest(write(t)) == t.
void write_trace_csv(const CapacitanceTrace& trace,
                     const std::filesystem::path& path);

// Experiment manifest: one JSON document per experiment with fields
// id, inclination_deg, u_gs_mps, u_os_mps, label, trace_path.
void write_experiment_manifest(const Experiment& e,
                               const std::filesystem::path& manifest_path,
                               const std::string& trace_path);

// Loads manifest + referenced trace (trace_path resolved relative to the
// manifest's directory). Rejects experiments that fail envelope validation
// or are shorter than min_trace_len.
Experiment load_experiment(const std::filesystem::path& manifest_path,
                           const PatternEnvelope& env,
                           std::size_t min_trace_len = 500,
                           bool calibrate = true);

}  // namespace flowpat
