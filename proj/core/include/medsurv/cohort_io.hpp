#pragma once

#include "medsurv/cohort.hpp"

#include <filesystem>

namespace medsurv {

/// Reads subjects.csv and landmarks.csv from `dir` and returns a validated
/// cohort. subjects.csv columns: subject_id, <baseline...>, event_age,
/// event_indicator. landmarks.csv columns: subject_id, age, z, l, m (long
/// format). Errors carry subject_id and row number.
Cohort load_cohort(const std::filesystem::path &dir, const CovariateSchema &schema);

/// Writes subjects.csv and landmarks.csv under `dir`. Values round-trip
/// exactly (17 significant digits).
void save_cohort(const Cohort &cohort, const std::filesystem::path &dir);

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

} // namespace medsurv
