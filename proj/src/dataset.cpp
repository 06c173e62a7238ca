#include "semvb/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "semvb/errors.hpp"

namespace semvb {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path, int line_no,
                  const std::string& column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw DataError(path + ":" + std::to_string(line_no) + ": column '" + column +
                    "': cell '" + cell + "' is not a finite number");
  }
  return v;
}

}  // namespace

int Dataset::observed_count(int j) const {
  int c = 0;
  for (int i = 0; i < n(); ++i) {
    c += observed(i, j) ? 1 : 0;
  }
  return c;
}

int Dataset::observed_total() const {
  int c = 0;
  for (int j = 0; j < m(); ++j) {
    c += observed_count(j);
  }
  return c;
}

void Dataset::validate() const {
  if (n() < 1 || m() < 1) {
    throw DataError("dataset: needs at least one row and one outcome");
  }
  if (x.rows() != y.rows()) {
    throw DataError("dataset: outcome and covariate row counts differ");
  }
  for (int i = 0; i < n(); ++i) {
    bool any = false;
    for (int j = 0; j < m(); ++j) {
      if (observed(i, j)) {
        any = true;
        if (!std::isfinite(y(i, j))) {
          throw DataError("dataset: row " + std::to_string(i + 1) +
                          " has a non-finite observed outcome");
        }
      }
    }
    if (!any) {
      throw DataError("dataset: row " + std::to_string(i + 1) +
                      " has no observed outcome");
    }
  }
  for (int k = 0; k < p(); ++k) {
    if (!x.col(k).allFinite()) {
      throw DataError("dataset: covariate column " + std::to_string(k + 1) +
                      " has non-finite values");
    }
    if (n() > 0 && (x.col(k).array() == 1.0).all()) {
      throw DataError("dataset: covariate column '" +
                      (k < static_cast<int>(covariate_names.size())
                           ? covariate_names[k]
                           : std::to_string(k + 1)) +
                      "' is all ones; intercepts are not part of the design");
    }
  }
}

Dataset load_csv(const std::string& path,
                 const std::vector<std::string>& outcome_columns,
                 const std::vector<std::string>& covariate_columns,
                 const std::string& missing_token) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path + ": empty file");
  }
  const auto header = split_csv_line(line);
  auto col_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(path + ": column '" + name + "' not found in header");
    }
    return static_cast<int>(it - header.begin());
  };
  std::vector<int> y_idx;
  std::vector<int> x_idx;
  for (const auto& name : outcome_columns) {
    y_idx.push_back(col_index(name));
  }
  for (const auto& name : covariate_columns) {
    x_idx.push_back(col_index(name));
  }

  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  const int N = static_cast<int>(rows.size());
  const int M = static_cast<int>(y_idx.size());
  const int P = static_cast<int>(x_idx.size());
  if (N == 0) {
    throw DataError(path + ": no data rows");
  }

  Dataset ds;
  ds.y.setConstant(N, M, std::numeric_limits<double>::quiet_NaN());
  ds.observed.setConstant(N, M, false);
  ds.x.resize(N, P);
  ds.outcome_names = outcome_columns;
  ds.covariate_names = covariate_columns;

  for (int i = 0; i < N; ++i) {
    const int file_line = i + 2;
    for (int j = 0; j < M; ++j) {
      const std::string& cell = rows[i][y_idx[j]];
      if (cell.empty() || cell == missing_token) {
        continue;
      }
      ds.y(i, j) = parse_cell(cell, path, file_line, outcome_columns[j]);
      ds.observed(i, j) = true;
    }
    bool any = false;
    for (int j = 0; j < M; ++j) {
      any = any || ds.observed(i, j);
    }
    if (!any) {
      throw DataError(path + ":" + std::to_string(file_line) + ": row " +
                      std::to_string(i + 1) + " has no observed outcome");
    }
    for (int k = 0; k < P; ++k) {
      const std::string& cell = rows[i][x_idx[k]];
      if (cell.empty() || cell == missing_token) {
        throw DataError(path + ":" + std::to_string(file_line) + ": covariate '" +
                        covariate_columns[k] + "' is missing; covariates must be complete");
      }
      ds.x(i, k) = parse_cell(cell, path, file_line, covariate_columns[k]);
    }
  }
  ds.validate();
  return ds;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write '" + path + "'");
  }
  for (size_t j = 0; j < ds.outcome_names.size(); ++j) {
    if (j) out << ',';
    out << ds.outcome_names[j];
  }
  for (const auto& name : ds.covariate_names) {
    out << ',' << name;
  }
  out << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.m(); ++j) {
      if (j) out << ',';
      if (ds.observed(i, j)) {
        out << format_double(ds.y(i, j));
      }
    }
    for (int k = 0; k < ds.p(); ++k) {
      out << ',' << format_double(ds.x(i, k));
    }
    out << '\n';
  }
}

Dataset standardize_outcomes(const Dataset& ds, double target_sd) {
  if (!(target_sd > 0.0)) {
    throw DataError("standardize_outcomes: target sd must be positive");
  }
  Dataset out = ds;
  Eigen::VectorXd factors(ds.m());
  for (int j = 0; j < ds.m(); ++j) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.observed(i, j)) {
        sum += ds.y(i, j);
        ++cnt;
      }
    }
    if (cnt < 2) {
      throw DataError("standardize_outcomes: outcome '" + ds.outcome_names[j] +
                      "' has fewer than 2 observed values");
    }
    const double mean = sum / cnt;
    double ss = 0.0;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.observed(i, j)) {
        const double d = ds.y(i, j) - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / (cnt - 1));
    if (!(sd > 0.0)) {
      throw DataError("standardize_outcomes: outcome '" + ds.outcome_names[j] +
                      "' is degenerate (zero sample sd)");
    }
    const double factor = target_sd / sd;
    factors[j] = factor;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.observed(i, j)) {
        out.y(i, j) = ds.y(i, j) * factor;
      }
    }
  }
  out.scale_factors = factors;
  return out;
}

}  // namespace semvb
