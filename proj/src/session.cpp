#include "hawkes/session.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hawkes {

std::size_t Person::event_count() const noexcept {
  return std::accumulate(sessions.begin(), sessions.end(), std::size_t{0},
                         [](std::size_t acc, const Session& s) { return acc + s.size(); });
}

std::size_t Cohort::session_count() const noexcept {
  return std::accumulate(persons.begin(), persons.end(), std::size_t{0},
                         [](std::size_t acc, const Person& p) { return acc + p.sessions.size(); });
}

std::size_t Cohort::event_count() const noexcept {
  return std::accumulate(persons.begin(), persons.end(), std::size_t{0},
                         [](std::size_t acc, const Person& p) { return acc + p.event_count(); });
}

void validate(const Session& session) {
  if (!(session.duration > 0.0) || !std::isfinite(session.duration)) {
    throw std::invalid_argument("session " + session.session_id + ": duration must be positive");
  }
  double prev = -1.0;
  for (double t : session.times) {
    if (!std::isfinite(t) || t < 0.0 || t >= session.duration) {
      throw std::invalid_argument("session " + session.session_id +
                                  ": event time outside [0, duration)");
    }
    if (t <= prev) {
      throw std::invalid_argument("session " + session.session_id +
                                  ": event times must be strictly increasing");
    }
    prev = t;
  }
}

void validate(const HawkesParams& p) {
  if (!(p.mu > 0.0) || !std::isfinite(p.mu)) throw std::invalid_argument("mu must be > 0");
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) throw std::invalid_argument("alpha must be >= 0");
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw std::invalid_argument("beta must be > 0");
  if (!(p.mu0 >= p.mu) || !std::isfinite(p.mu0)) throw std::invalid_argument("mu0 must be >= mu");
}

void validate(const Cohort& cohort) {
  for (const auto& person : cohort.persons) {
    for (const auto& s : person.sessions) validate(s);
  }
}

}  // namespace hawkes
