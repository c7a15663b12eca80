#pragma once

#include "medsurv/sampler.hpp"

#include <filesystem>

namespace medsurv {

/// JSONL draw store: a schema-versioned header line with the chain-level
/// constants, then one posterior state per line. Doubles round-trip exactly.
void write_draw_store(const DrawStore &store, const std::filesystem::path &file);

DrawStore read_draw_store(const std::filesystem::path &file);

/// CSV of per-block Metropolis-Hastings acceptance rates (one row per block
/// per logging window).
void write_acceptance_log(const std::vector<AcceptanceRecord> &log,
                          const std::filesystem::path &file);

} // namespace medsurv
