#include "vcsurv/io.hpp"

#include "vcsurv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace vcsurv {

namespace {

std::string where(const std::string& source, std::size_t line, std::string_view column = {}) {
  std::string out = source + ":" + std::to_string(line);
  if (!column.empty()) out += " column '" + std::string(column) + "'";
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

// Numbers before strings, numbers by value, strings lexicographically.
bool id_less(const std::string& a, const std::string& b) {
  double x = 0.0;
  double y = 0.0;
  const bool na = parse_double(a, x);
  const bool nb = parse_double(b, y);
  if (na && nb && x != y) return x < y;
  if (na != nb) return na;
  return a < b;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw Error(ErrorCode::ingest, "missing column '" + std::string(name) + "'", source + ":1");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  double v = 0.0;
  const auto& cell = rows[row][col];
  if (!parse_double(cell, v) || !std::isfinite(v)) {
    throw Error(ErrorCode::ingest, "non-numeric cell '" + cell + "'",
                where(source, lines[row], header[col]));
  }
  return v;
}

CsvTable parse_csv(std::string_view text, std::string source) {
  CsvTable table;
  table.source = std::move(source);
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> starts;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && trim(record[0]).empty();
    if (!blank) {
      records.push_back(std::move(record));
      starts.push_back(record_line);
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
      record_line = line;
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::ingest, "unterminated quoted field", where(table.source, line));
  if (!field.empty() || !record.empty()) end_record();

  if (records.empty()) throw Error(ErrorCode::ingest, "missing header row", table.source);
  for (auto& h : records.front()) table.header.push_back(trim(h));
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::ingest,
                  "expected " + std::to_string(table.header.size()) + " fields, found " +
                      std::to_string(records[r].size()),
                  where(table.source, starts[r]));
    }
    table.rows.push_back(std::move(records[r]));
    table.lines.push_back(starts[r]);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ingest, "cannot open file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

namespace {

Dataset build_dataset(const CsvTable& subj, const CsvTable& lon, std::optional<double> tau) {
  const std::size_t c_id = subj.column("id");
  const std::size_t c_time = subj.column("time");
  const std::size_t c_event = subj.column("event");
  const std::size_t l_id = lon.column("id");
  const std::size_t l_time = lon.column("obs_time");

  std::vector<std::size_t> z_cols;
  for (std::size_t p = 1;; ++p) {
    const std::string name = "z" + std::to_string(p);
    const auto it = std::find(lon.header.begin(), lon.header.end(), name);
    if (it == lon.header.end()) break;
    z_cols.push_back(static_cast<std::size_t>(it - lon.header.begin()));
  }
  if (z_cols.empty()) throw Error(ErrorCode::ingest, "no covariate columns z1..zp", lon.source + ":1");
  const std::size_t p = z_cols.size();

  std::map<std::string, std::size_t, bool (*)(const std::string&, const std::string&)> index(id_less);
  std::vector<SubjectRecord> records;
  for (std::size_t r = 0; r < subj.rows.size(); ++r) {
    const std::string id = trim(subj.rows[r][c_id]);
    if (id.empty()) throw Error(ErrorCode::ingest, "empty id", where(subj.source, subj.lines[r], "id"));
    if (index.count(id) != 0) {
      throw Error(ErrorCode::ingest, "duplicate subject id '" + id + "'",
                  where(subj.source, subj.lines[r], "id"));
    }
    const double event = subj.number(r, c_event);
    if (event != 0.0 && event != 1.0) {
      throw Error(ErrorCode::ingest, "event must be 0 or 1",
                  where(subj.source, subj.lines[r], "event"));
    }
    SubjectRecord rec;
    rec.id = id;
    rec.follow_up_time = subj.number(r, c_time);
    rec.event = event == 1.0;
    index.emplace(id, records.size());
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error(ErrorCode::ingest, "no subjects", subj.source);

  struct Obs {
    double time;
    std::size_t row;
  };
  std::vector<std::vector<Obs>> obs(records.size());
  for (std::size_t r = 0; r < lon.rows.size(); ++r) {
    const std::string id = trim(lon.rows[r][l_id]);
    const auto it = index.find(id);
    if (it == index.end()) {
      throw Error(ErrorCode::ingest, "unknown subject id '" + id + "'",
                  where(lon.source, lon.lines[r], "id"));
    }
    obs[it->second].push_back({lon.number(r, l_time), r});
  }
  std::size_t matched = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& list = obs[i];
    std::sort(list.begin(), list.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (list[k].time == list[k - 1].time) {
        throw Error(ErrorCode::ingest,
                    "duplicate observation time for subject '" + records[i].id + "'",
                    where(lon.source, std::max(lon.lines[list[k].row], lon.lines[list[k - 1].row]),
                          "obs_time"));
      }
    }
    auto& rec = records[i];
    rec.covariates.resize(static_cast<Eigen::Index>(list.size()), static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < list.size(); ++k) {
      rec.obs_times.push_back(list[k].time);
      for (std::size_t c = 0; c < p; ++c) {
        rec.covariates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
            lon.number(list[k].row, z_cols[c]);
      }
    }
    matched += list.size();
  }
  if (matched == 0) throw Error(ErrorCode::ingest, "no longitudinal rows match any subject", lon.source);

  std::vector<SubjectRecord> ordered;
  ordered.reserve(records.size());
  for (const auto& [id, i] : index) ordered.push_back(std::move(records[i]));
  double horizon = 0.0;
  for (const auto& rec : ordered) horizon = std::max(horizon, rec.follow_up_time);
  return Dataset(std::move(ordered), tau ? *tau : horizon, p);
}

}  // namespace

Dataset ingest(const std::filesystem::path& subjects, const std::filesystem::path& longitudinal,
               std::optional<double> tau) {
  return build_dataset(read_csv(subjects), read_csv(longitudinal), tau);
}

Dataset ingest_text(std::string_view subjects, std::string_view longitudinal,
                    std::optional<double> tau) {
  return build_dataset(parse_csv(subjects, "subjects"), parse_csv(longitudinal, "longitudinal"),
                       tau);
}

std::string format_exact(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_value(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_dataset(const Dataset& data, std::ostream& subjects, std::ostream& longitudinal) {
  subjects << "id,time,event\n";
  longitudinal << "id,obs_time";
  for (std::size_t c = 1; c <= data.p(); ++c) longitudinal << ",z" << c;
  longitudinal << '\n';
  for (const auto& rec : data.subjects()) {
    const std::string id = csv_escape(rec.id);
    subjects << id << ',' << format_exact(rec.follow_up_time) << ',' << (rec.event ? 1 : 0) << '\n';
    for (std::size_t k = 0; k < rec.num_obs(); ++k) {
      longitudinal << id << ',' << format_exact(rec.obs_times[k]);
      for (Eigen::Index c = 0; c < rec.covariates.cols(); ++c) {
        longitudinal << ',' << format_exact(rec.covariates(static_cast<Eigen::Index>(k), c));
      }
      longitudinal << '\n';
    }
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& subjects,
                   const std::filesystem::path& longitudinal) {
  std::ofstream s(subjects, std::ios::binary);
  std::ofstream l(longitudinal, std::ios::binary);
  if (!s || !l) throw Error(ErrorCode::config, "cannot write dataset files", subjects.string());
  write_dataset(data, s, l);
}

}  // namespace vcsurv
