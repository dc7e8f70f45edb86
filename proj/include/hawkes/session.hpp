#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hawkes {

/// One observation window. Times are minutes since the window opened,
/// strictly increasing and strictly below `duration`.
struct Session {
  std::string person_id;
  std::string session_id;
  double duration{0.0};
  std::vector<double> times;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] bool empty() const noexcept { return times.empty(); }
};

struct Person {
  std::string id;
  std::vector<Session> sessions;

  [[nodiscard]] std::size_t event_count() const noexcept;
};

struct Cohort {
  std::vector<Person> persons;

  [[nodiscard]] std::size_t session_count() const noexcept;
  [[nodiscard]] std::size_t event_count() const noexcept;
};

/// Edge-corrected exponential-kernel Hawkes parameters.
///   mu    baseline intensity (events/min)
///   alpha branching factor
///   beta  kernel decay rate (1/min)
///   mu0   intensity at the start of the window, mu0 >= mu
struct HawkesParams {
  double mu{0.0};
  double alpha{0.0};
  double beta{1.0};
  double mu0{0.0};

  [[nodiscard]] double delta_mu() const noexcept { return mu0 - mu; }
  [[nodiscard]] static HawkesParams homogeneous(double rate) noexcept {
    return {rate, 0.0, 1.0, rate};
  }
};

/// Who triggered an event: the baseline, the pre-window (edge) excitation,
/// or an earlier event of the same session.
struct ParentLabel {
  enum class Kind : std::uint8_t { exogenous, edge, event };
  Kind kind{Kind::exogenous};
  std::size_t index{0};  // meaningful only for Kind::event

  friend bool operator==(const ParentLabel&, const ParentLabel&) = default;
};

// Throw std::invalid_argument on a violated invariant.
void validate(const Session& session);
void validate(const HawkesParams& params);
void validate(const Cohort& cohort);

}  // namespace hawkes
