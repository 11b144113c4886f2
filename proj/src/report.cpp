#include "frdpca/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "frdpca/errors.hpp"

namespace frdpca::cli {

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

long CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<long>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;  // current record has content
  std::size_t line = 1;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
    any = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\r') {
      if (in.peek() != '\n') field += c;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw InputError("csv: unterminated quote near line " + std::to_string(line));
  if (any || !field.empty()) end_record();
  if (records.empty()) throw InputError("csv: no header row");

  CsvTable t;
  t.header = std::move(records[0]);
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size()) {
      throw InputError("csv: record " + std::to_string(i + 1) + " has " +
                       std::to_string(records[i].size()) + " fields, header has " +
                       std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_csv(in);
}

void write_csv(const CsvTable& table, std::ostream& out) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell(row[i]);
    out << "\n";
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (const double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::string format_mean_sd(const MeanSd& m, int digits) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f \xC2\xB1 %.*f", digits, m.mean, digits, m.sd);
  return buf;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"sq_error",  "half_sq_error", "frob_error",
                                             "alignment", "ar",            "ar_relative",
                                             "sigma2_hat", "comm_floats",  "wall_ms"};
  return cols;
}

CsvTable summarize_reports(std::span<const CsvTable> reports) {
  if (reports.empty()) throw InputError("report: no input tables");
  const auto& header = reports[0].header;
  for (const auto& t : reports) {
    if (t.header != header) throw InputError("report: inputs have different columns");
  }
  const auto& metrics = metric_columns();
  std::vector<std::size_t> key_cols;
  std::vector<std::size_t> metric_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h == "rep" || h == "l_hat") continue;
    if (std::find(metrics.begin(), metrics.end(), h) != metrics.end()) {
      metric_cols.push_back(i);
    } else {
      key_cols.push_back(i);
    }
  }
  if (metric_cols.empty()) throw InputError("report: no metric columns");
  const long lhat = reports[0].column("l_hat");

  struct Group {
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> lhat;
  };
  std::vector<std::vector<std::string>> order;
  std::map<std::vector<std::string>, Group> groups;
  for (const auto& t : reports) {
    for (const auto& row : t.rows) {
      std::vector<std::string> key;
      for (const std::size_t k : key_cols) key.push_back(row[k]);
      auto [it, inserted] = groups.try_emplace(key);
      if (inserted) {
        order.push_back(key);
        it->second.values.resize(metric_cols.size());
      }
      for (std::size_t m = 0; m < metric_cols.size(); ++m) {
        double v;
        if (parse_double(row[metric_cols[m]], v)) it->second.values[m].push_back(v);
      }
      if (lhat >= 0 && !row[static_cast<std::size_t>(lhat)].empty()) {
        std::vector<double> ls;
        std::stringstream ss(row[static_cast<std::size_t>(lhat)]);
        std::string item;
        while (std::getline(ss, item, ';')) {
          double v;
          if (parse_double(item, v)) ls.push_back(v);
        }
        it->second.lhat.push_back(std::move(ls));
      }
    }
  }

  CsvTable out;
  for (const std::size_t k : key_cols) out.header.push_back(header[k]);
  out.header.push_back("reps");
  for (const std::size_t m : metric_cols) {
    out.header.push_back(header[m] + "_mean");
    out.header.push_back(header[m] + "_sd");
    out.header.push_back(header[m]);
  }
  if (lhat >= 0) out.header.push_back("l_hat_mean");

  for (const auto& key : order) {
    const Group& g = groups.at(key);
    std::vector<std::string> row = key;
    std::size_t reps = 0;
    for (const auto& v : g.values) reps = std::max(reps, v.size());
    row.push_back(std::to_string(std::max(reps, g.lhat.size())));
    for (const auto& v : g.values) {
      if (v.empty()) {
        row.insert(row.end(), {"", "", ""});
        continue;
      }
      const MeanSd s = mean_sd(v);
      row.push_back(fmt(s.mean));
      row.push_back(fmt(s.sd));
      row.push_back(format_mean_sd(s));
    }
    if (lhat >= 0) {
      std::string joined;
      if (!g.lhat.empty()) {
        const std::size_t width = g.lhat[0].size();
        for (std::size_t i = 0; i < width; ++i) {
          std::vector<double> col;
          for (const auto& l : g.lhat) {
            if (i < l.size()) col.push_back(l[i]);
          }
          if (i > 0) joined += ';';
          joined += fmt(mean_sd(col).mean);
        }
      }
      row.push_back(joined);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace frdpca::cli
