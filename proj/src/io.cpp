#include "hawkes/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <json.hpp>
#include <sstream>

namespace hawkes {
namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'H', 'W', 'K', 'D', 'R', 'A', 'W', '1'};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

struct Table {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in, const std::string& name, const std::vector<std::string>& columns) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ValidationError(name + ": missing header row");
  const std::vector<std::string> header = split_csv(line);
  for (const auto& col : columns) {
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) throw ValidationError(name + ": missing column '" + col + "'");
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  Table t;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ValidationError(name + " row " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<std::string> row;
    for (std::size_t i : index) row.push_back(fields[i]);
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(line_no);
  }
  return t;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ValidationError(where + ": '" + s + "' is not a finite number");
  }
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

std::vector<std::string> column_names(const PosteriorDraws& d) {
  std::vector<std::string> cols = d.names;
  cols.insert(cols.end(), {"log_prior", "log_prior_branching", "log_likelihood"});
  for (std::size_t s = 0; s < d.sessions; ++s) cols.push_back("loglik[" + std::to_string(s) + "]");
  cols.insert(cols.end(), {"divergent", "tree_depth", "energy", "accept_stat"});
  return cols;
}

}  // namespace

Cohort ingest(std::istream& sessions_csv, std::istream& events_csv, const std::string& sessions_name,
              const std::string& events_name) {
  const Table st = read_table(sessions_csv, sessions_name, {"person_id", "session_id", "duration_min"});
  const Table et = read_table(events_csv, events_name, {"person_id", "session_id", "event_time_min"});

  Cohort cohort;
  std::map<std::string, std::size_t> person_index;
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> session_index;
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& row = st.rows[r];
    const std::string where = sessions_name + " row " + std::to_string(st.line_numbers[r]);
    if (row[0].empty() || row[1].empty()) throw ValidationError(where + ": empty identifier");
    const double duration = parse_number(row[2], where);
    if (!(duration > 0.0)) throw ValidationError(where + ": duration must be positive");
    auto [pit, inserted] = person_index.try_emplace(row[0], cohort.persons.size());
    if (inserted) {
      Person p;
      p.id = row[0];
      cohort.persons.push_back(std::move(p));
    }
    Person& person = cohort.persons[pit->second];
    const auto key = std::make_pair(row[0], row[1]);
    if (session_index.count(key)) throw ValidationError(where + ": duplicate session " + row[0] + "/" + row[1]);
    session_index[key] = {pit->second, person.sessions.size()};
    Session s;
    s.person_id = row[0];
    s.session_id = row[1];
    s.duration = duration;
    person.sessions.push_back(std::move(s));
  }

  // Each event remembers its row so that sorting keeps error messages exact.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<double, std::size_t>>> pending;
  for (std::size_t r = 0; r < et.rows.size(); ++r) {
    const auto& row = et.rows[r];
    const std::string where = events_name + " row " + std::to_string(et.line_numbers[r]);
    const auto it = session_index.find({row[0], row[1]});
    if (it == session_index.end()) {
      throw ValidationError(where + ": event for unknown session " + row[0] + "/" + row[1]);
    }
    const double t = parse_number(row[2], where);
    const Session& s = cohort.persons[it->second.first].sessions[it->second.second];
    if (t < 0.0) throw ValidationError(where + ": event time is negative");
    if (t >= s.duration) {
      throw ValidationError(where + ": event time " + row[2] + " is not before the session duration " +
                            format_double(s.duration));
    }
    pending[it->second].emplace_back(t, et.line_numbers[r]);
  }
  for (auto& [key, events] : pending) {
    std::sort(events.begin(), events.end());
    Session& s = cohort.persons[key.first].sessions[key.second];
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (i > 0 && events[i].first == events[i - 1].first) {
        throw ValidationError(events_name + " row " + std::to_string(events[i].second) +
                              ": duplicate event time in session " + s.person_id + "/" + s.session_id +
                              " (simultaneous events have no defined ordering for the intensity)");
      }
      s.times.push_back(events[i].first);
    }
  }
  validate(cohort);
  return cohort;
}

Cohort ingest(const std::filesystem::path& sessions_csv, const std::filesystem::path& events_csv) {
  std::ifstream s(sessions_csv);
  if (!s) throw ValidationError("cannot open " + sessions_csv.string());
  std::ifstream e(events_csv);
  if (!e) throw ValidationError("cannot open " + events_csv.string());
  return ingest(s, e, sessions_csv.filename().string(), events_csv.filename().string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_sessions_csv(const Cohort& cohort, std::ostream& out) {
  out << "person_id,session_id,duration_min\n";
  for (const auto& p : cohort.persons) {
    for (const auto& s : p.sessions) {
      out << quote_csv(p.id) << ',' << quote_csv(s.session_id) << ',' << format_double(s.duration) << '\n';
    }
  }
}

void write_events_csv(const Cohort& cohort, std::ostream& out) {
  out << "person_id,session_id,event_time_min\n";
  for (const auto& p : cohort.persons) {
    for (const auto& s : p.sessions) {
      for (double t : s.times) {
        out << quote_csv(p.id) << ',' << quote_csv(s.session_id) << ',' << format_double(t) << '\n';
      }
    }
  }
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& sessions_csv,
                  const std::filesystem::path& events_csv) {
  std::ofstream s(sessions_csv);
  std::ofstream e(events_csv);
  if (!s || !e) throw std::runtime_error("cannot write cohort files");
  write_sessions_csv(cohort, s);
  write_events_csv(cohort, e);
}

std::filesystem::path draws_chain_path(const std::filesystem::path& directory, const std::string& model,
                                       std::size_t chain) {
  return directory / (model + ".chain" + std::to_string(chain) + ".draws");
}

void write_draws_chain(const PosteriorDraws& d, std::size_t chain, const std::filesystem::path& file) {
  if (chain >= d.chains) throw std::out_of_range("write_draws_chain: no such chain");
  const std::vector<std::string> cols = column_names(d);
  json header;
  header["model"] = d.model;
  header["chain"] = chain;
  header["chains"] = d.chains;
  header["draws"] = d.draws;
  header["sessions"] = d.sessions;
  header["parameters"] = d.names.size();
  header["columns"] = cols;
  header["step_size"] = chain < d.step_size.size() ? d.step_size[chain] : 0.0;
  const std::string text = header.dump();

  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const std::size_t dim = d.dim();
  const std::size_t base = chain * d.draws;
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, d.values[(base + i) * dim + k]);
  }
  for (const auto* v : {&d.log_prior, &d.log_prior_branching, &d.log_likelihood}) {
    for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, (*v)[base + i]);
  }
  for (std::size_t s = 0; s < d.sessions; ++s) {
    for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, d.session_loglik[(base + i) * d.sessions + s]);
  }
  for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, d.divergent[base + i]);
  for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, d.tree_depth[base + i]);
  for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, d.energy[base + i]);
  for (std::size_t i = 0; i < d.draws; ++i) write_f64(out, d.accept_stat[base + i]);
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

void write_draws(const PosteriorDraws& d, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (std::size_t c = 0; c < d.chains; ++c) write_draws_chain(d, c, draws_chain_path(directory, d.model, c));
}

PosteriorDraws read_draws(const std::filesystem::path& directory, const std::string& model) {
  PosteriorDraws d;
  d.model = model;
  for (std::size_t c = 0;; ++c) {
    const std::filesystem::path file = draws_chain_path(directory, model, c);
    if (!std::filesystem::exists(file)) {
      if (c == 0) throw ValidationError("no draws for model '" + model + "' in " + directory.string());
      break;
    }
    std::ifstream in(file, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw ValidationError(file.string() + ": not a draws file");
    const std::uint64_t len = read_u64(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const json header = json::parse(text);
    const auto draws = header.at("draws").get<std::size_t>();
    const auto sessions = header.at("sessions").get<std::size_t>();
    const auto n_params = header.at("parameters").get<std::size_t>();
    const auto cols = header.at("columns").get<std::vector<std::string>>();
    if (c == 0) {
      d.draws = draws;
      d.sessions = sessions;
      d.names.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(n_params));
    } else if (draws != d.draws || sessions != d.sessions ||
               !std::equal(d.names.begin(), d.names.end(), cols.begin())) {
      throw ValidationError(file.string() + ": chain layout differs from chain 0");
    }
    if (cols.size() != n_params + 3 + sessions + 4) throw ValidationError(file.string() + ": bad column list");
    std::vector<std::vector<double>> block(cols.size(), std::vector<double>(draws));
    for (auto& col : block) {
      for (auto& v : col) v = read_f64(in);
    }
    if (!in) throw ValidationError(file.string() + ": truncated");
    for (std::size_t i = 0; i < draws; ++i) {
      for (std::size_t k = 0; k < n_params; ++k) d.values.push_back(block[k][i]);
      d.log_prior.push_back(block[n_params][i]);
      d.log_prior_branching.push_back(block[n_params + 1][i]);
      d.log_likelihood.push_back(block[n_params + 2][i]);
      for (std::size_t s = 0; s < sessions; ++s) d.session_loglik.push_back(block[n_params + 3 + s][i]);
      const std::size_t tail = n_params + 3 + sessions;
      d.divergent.push_back(static_cast<std::uint8_t>(block[tail][i]));
      d.tree_depth.push_back(static_cast<int>(block[tail + 1][i]));
      d.energy.push_back(block[tail + 2][i]);
      d.accept_stat.push_back(block[tail + 3][i]);
    }
    d.step_size.push_back(header.value("step_size", 0.0));
    d.chains = c + 1;
  }
  return d;
}

}  // namespace hawkes
