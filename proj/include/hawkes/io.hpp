#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hawkes/nuts.hpp"
#include "hawkes/session.hpp"

namespace hawkes {

/// Malformed input data or configuration; maps to the validation exit code.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reads the sessions table (person_id, session_id, duration_min) and the
/// events table (person_id, session_id, event_time_min). Persons and
/// sessions keep their first-appearance order; event times are sorted.
/// Errors cite the offending file and one-based row number.
[[nodiscard]] Cohort ingest(std::istream& sessions_csv, std::istream& events_csv,
                            const std::string& sessions_name = "sessions",
                            const std::string& events_name = "events");
[[nodiscard]] Cohort ingest(const std::filesystem::path& sessions_csv, const std::filesystem::path& events_csv);

void write_sessions_csv(const Cohort& cohort, std::ostream& out);
void write_events_csv(const Cohort& cohort, std::ostream& out);
void write_cohort(const Cohort& cohort, const std::filesystem::path& sessions_csv,
                  const std::filesystem::path& events_csv);

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

// Draws file layout, one file per chain:
//   bytes 0-7   magic "HWKDRAW1"
//   bytes 8-15  header length L, uint64 little-endian
//   next L      UTF-8 JSON header: model, chain, draws, columns[], step_size
//   remainder   one float64 little-endian block of `draws` values per column,
//               in header column order
// Columns: every parameter name, then log_prior, log_prior_branching,
// log_likelihood, loglik[<session index>], divergent, tree_depth, energy,
// accept_stat.

void write_draws_chain(const PosteriorDraws& draws, std::size_t chain, const std::filesystem::path& file);
void write_draws(const PosteriorDraws& draws, const std::filesystem::path& directory);
[[nodiscard]] std::filesystem::path draws_chain_path(const std::filesystem::path& directory,
                                                     const std::string& model, std::size_t chain);
/// Reads every chain file of `model` found in `directory`.
[[nodiscard]] PosteriorDraws read_draws(const std::filesystem::path& directory, const std::string& model);

}  // namespace hawkes
