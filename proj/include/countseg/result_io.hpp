#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "countseg/benchmark.hpp"
#include "countseg/constrained.hpp"
#include "countseg/errors.hpp"
#include "countseg/loss.hpp"
#include "countseg/model_selection.hpp"
#include "countseg/segmentation.hpp"
#include "countseg/series.hpp"

namespace countseg {

// ---------------------------------------------------------------------------
// Numbers. Shortest round-trip formatting, independent of the C++ locale.

inline std::string format_number(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    return std::nullopt;
  return x;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos)
      return out;
    start = pos + 1;
  }
}

inline std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
      ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t')
      ++i;
    if (i > b)
      out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    s = s.substr(1, s.size() - 2);
  return s;
}

inline std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return trim(hash == std::string_view::npos ? line : line.substr(0, hash));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Series input: one observation per line, `#` comments and blank lines
// ignored; or one column of a headered CSV file.

inline CountSeries read_series(std::istream& in, const std::string& csv_column = "") {
  std::vector<double> values;
  std::string line;
  long lineno = 0;
  std::optional<std::size_t> column;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = detail::strip_comment(line);
    if (body.empty())
      continue;
    std::string_view field = body;
    if (!csv_column.empty()) {
      const auto cells = detail::split(body, ',');
      if (!column) {
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (detail::unquote(cells[i]) == csv_column)
            column = i;
        if (!column)
          throw InputError("CSV header has no column named '" + csv_column + "'", lineno);
        continue;
      }
      if (*column >= cells.size())
        throw InputError("row has " + std::to_string(cells.size()) + " fields, column '" +
                             csv_column + "' is field " + std::to_string(*column + 1),
                         lineno);
      field = detail::unquote(cells[*column]);
    }
    const auto x = parse_number(field);
    if (!x)
      throw InputError("not a number: '" + std::string(field) + "'", lineno);
    if (!std::isfinite(*x))
      throw InputError("observation is not finite", lineno);
    values.push_back(*x);
  }
  if (in.bad())
    throw InputError("read error");
  if (!csv_column.empty() && !column)
    throw InputError("CSV input has no header line");
  return CountSeries(std::move(values));
}

inline CountSeries read_series_file(const std::filesystem::path& path,
                                    const std::string& csv_column = "") {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open '" + path.string() + "'");
  try {
    return read_series(in, csv_column);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void write_series(std::ostream& out, const CountSeries& s) {
  for (double y : s.values())
    out << format_number(y) << '\n';
}

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::random_device rd;
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot create '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move result into '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// Result document, "countseg-result v1": one `key: value` pair per line,
// arrays space-separated, per-K rows keyed `name[k]`.

inline constexpr std::string_view kResultHeader = "countseg-result v1";

struct ResultDocument {
  std::size_t n = 0;
  Model model = Model::Poisson;
  /// Dispersion used (negative binomial only).
  std::optional<double> phi;
  /// "given" or "auto"; with "auto", the window width the estimator settled on.
  std::string phi_source;
  std::optional<std::size_t> phi_window;
  int kmax = 0;
  double seconds = 0.0;
  std::vector<double> costs;
  std::vector<std::vector<std::size_t>> breakpoints;
  std::vector<std::vector<double>> parameters;
  std::optional<SelectionResult> selection;

  friend bool operator==(const ResultDocument& a, const ResultDocument& b) {
    auto same = [](double x, double y) {
      return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    auto same_vec = [&](const std::vector<double>& x, const std::vector<double>& y) {
      if (x.size() != y.size())
        return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!same(x[i], y[i]))
          return false;
      return true;
    };
    if (a.n != b.n || a.model != b.model || a.phi != b.phi || a.phi_source != b.phi_source ||
        a.phi_window != b.phi_window || a.kmax != b.kmax || !same(a.seconds, b.seconds) ||
        !same_vec(a.costs, b.costs) || a.breakpoints != b.breakpoints ||
        a.parameters.size() != b.parameters.size() || a.selection.has_value() != b.selection.has_value())
      return false;
    for (std::size_t i = 0; i < a.parameters.size(); ++i)
      if (!same_vec(a.parameters[i], b.parameters[i]))
        return false;
    if (a.selection) {
      const auto &x = *a.selection, &y = *b.selection;
      return x.k_hat == y.k_hat && x.criterion == y.criterion && same(x.beta, y.beta) &&
             same_vec(x.values, y.values) && same_vec(x.penshape, y.penshape);
    }
    return true;
  }
};

inline ResultDocument make_document(const SegmentationResult& seg, double seconds = 0.0) {
  ResultDocument doc;
  doc.n = seg.n;
  doc.model = seg.model;
  if (seg.model == Model::NegativeBinomial) {
    doc.phi = seg.phi;
    doc.phi_source = "given";
  }
  doc.kmax = seg.kmax;
  doc.seconds = seconds;
  doc.costs = seg.costs;
  doc.breakpoints = seg.breakpoints;
  for (const auto& row : seg.parameters) {
    std::vector<double> values;
    for (const MleEstimate& p : row)
      values.push_back(p.value);
    doc.parameters.push_back(std::move(values));
  }
  return doc;
}

namespace detail {

template <class Range>
std::string join_numbers(const Range& xs) {
  std::string s;
  for (const auto& x : xs) {
    if (!s.empty())
      s += ' ';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>)
      s += format_number(x);
    else
      s += std::to_string(x);
  }
  return s;
}

} // namespace detail

inline void write_result(std::ostream& out, const ResultDocument& doc) {
  auto line = [&](std::string_view key, const std::string& value) {
    out << key << ':';
    if (!value.empty())
      out << ' ' << value;
    out << '\n';
  };
  out << kResultHeader << '\n';
  line("n", std::to_string(doc.n));
  line("model", std::string(model_name(doc.model)));
  if (doc.phi)
    line("phi", format_number(*doc.phi));
  if (!doc.phi_source.empty())
    line("phi_source", doc.phi_source);
  if (doc.phi_window)
    line("phi_window", std::to_string(*doc.phi_window));
  line("kmax", std::to_string(doc.kmax));
  line("seconds", format_number(doc.seconds));
  line("costs", detail::join_numbers(doc.costs));
  for (std::size_t k = 0; k < doc.breakpoints.size(); ++k)
    line("breakpoints[" + std::to_string(k + 1) + "]", detail::join_numbers(doc.breakpoints[k]));
  for (std::size_t k = 0; k < doc.parameters.size(); ++k)
    line("parameters[" + std::to_string(k + 1) + "]", detail::join_numbers(doc.parameters[k]));
  if (doc.selection) {
    const SelectionResult& s = *doc.selection;
    line("selection.criterion", std::string(criterion_name(s.criterion)));
    line("selection.k_hat", std::to_string(s.k_hat));
    if (s.criterion == Criterion::Oracle) {
      line("selection.beta", format_number(s.beta));
      line("selection.penshape", detail::join_numbers(s.penshape));
    }
    line("selection.values", detail::join_numbers(s.values));
  }
}

inline std::string result_to_string(const ResultDocument& doc) {
  std::ostringstream out;
  write_result(out, doc);
  return out.str();
}

inline ResultDocument parse_result(std::istream& in) {
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line) || detail::trim(line) != kResultHeader)
    throw InputError("not a result document (expected header '" + std::string(kResultHeader) +
                         "')",
                     1);

  std::map<std::string, std::pair<std::string, long>> fields;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#')
      continue;
    const auto colon = body.find(':');
    if (colon == std::string_view::npos)
      throw InputError("expected 'key: value'", lineno);
    std::string key(detail::trim(body.substr(0, colon)));
    if (!fields.emplace(key, std::pair{std::string(detail::trim(body.substr(colon + 1))), lineno})
             .second)
      throw InputError("duplicate key '" + key + "'", lineno);
  }

  auto take = [&](const std::string& key) -> std::optional<std::pair<std::string, long>> {
    auto it = fields.find(key);
    if (it == fields.end())
      return std::nullopt;
    auto v = it->second;
    fields.erase(it);
    return v;
  };
  auto need = [&](const std::string& key) {
    auto v = take(key);
    if (!v)
      throw InputError("result document lacks '" + key + "'");
    return *v;
  };
  auto number = [](const std::pair<std::string, long>& v) {
    const auto x = parse_number(v.first);
    if (!x)
      throw InputError("not a number: '" + v.first + "'", v.second);
    return *x;
  };
  auto integer = [](const std::pair<std::string, long>& v) -> long long {
    long long x = 0;
    const char* end = v.first.data() + v.first.size();
    const auto res = std::from_chars(v.first.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end || v.first.empty())
      throw InputError("not an integer: '" + v.first + "'", v.second);
    return x;
  };
  auto numbers = [&](const std::pair<std::string, long>& v) {
    std::vector<double> xs;
    for (auto w : detail::words(v.first)) {
      const auto x = parse_number(w);
      if (!x)
        throw InputError("not a number: '" + std::string(w) + "'", v.second);
      xs.push_back(*x);
    }
    return xs;
  };
  auto indices = [&](const std::pair<std::string, long>& v) {
    std::vector<std::size_t> xs;
    for (auto w : detail::words(v.first))
      xs.push_back(static_cast<std::size_t>(integer({std::string(w), v.second})));
    return xs;
  };

  ResultDocument doc;
  const auto n = integer(need("n"));
  if (n < 1)
    throw InputError("n must be positive");
  doc.n = static_cast<std::size_t>(n);
  const auto model = need("model");
  const auto m = parse_model(model.first);
  if (!m)
    throw InputError("unknown model '" + model.first + "'", model.second);
  doc.model = *m;
  if (auto v = take("phi"))
    doc.phi = number(*v);
  if (auto v = take("phi_source"))
    doc.phi_source = v->first;
  if (auto v = take("phi_window"))
    doc.phi_window = static_cast<std::size_t>(integer(*v));
  const auto kmax = need("kmax");
  doc.kmax = static_cast<int>(integer(kmax));
  if (doc.kmax < 1 || static_cast<std::size_t>(doc.kmax) > doc.n)
    throw InputError("kmax outside [1, n]", kmax.second);
  doc.seconds = number(need("seconds"));
  const auto costs = need("costs");
  doc.costs = numbers(costs);
  if (doc.costs.size() != static_cast<std::size_t>(doc.kmax))
    throw InputError("expected " + std::to_string(doc.kmax) + " costs", costs.second);
  for (int k = 1; k <= doc.kmax; ++k) {
    const auto row = need("breakpoints[" + std::to_string(k) + "]");
    auto breaks = indices(row);
    if (breaks.size() != static_cast<std::size_t>(k - 1))
      throw InputError("breakpoints[" + std::to_string(k) + "] needs " + std::to_string(k - 1) +
                           " entries",
                       row.second);
    for (std::size_t i = 0; i < breaks.size(); ++i)
      if (breaks[i] < 1 || breaks[i] >= doc.n || (i > 0 && breaks[i] <= breaks[i - 1]))
        throw InputError("breakpoints must increase strictly within [1, n - 1]", row.second);
    doc.breakpoints.push_back(std::move(breaks));
    if (auto p = take("parameters[" + std::to_string(k) + "]")) {
      auto params = numbers(*p);
      if (params.size() != static_cast<std::size_t>(k))
        throw InputError("parameters[" + std::to_string(k) + "] needs " + std::to_string(k) +
                             " entries",
                         p->second);
      doc.parameters.push_back(std::move(params));
    }
  }
  if (!doc.parameters.empty() && doc.parameters.size() != static_cast<std::size_t>(doc.kmax))
    throw InputError("parameters present for only some K");

  if (auto c = take("selection.criterion")) {
    SelectionResult s;
    const auto crit = parse_criterion(c->first);
    if (!crit)
      throw InputError("unknown criterion '" + c->first + "'", c->second);
    s.criterion = *crit;
    const auto k_hat = need("selection.k_hat");
    s.k_hat = static_cast<int>(integer(k_hat));
    if (s.k_hat < 1 || s.k_hat > doc.kmax)
      throw InputError("selection.k_hat outside [1, kmax]", k_hat.second);
    if (auto b = take("selection.beta"))
      s.beta = number(*b);
    if (auto p = take("selection.penshape"))
      s.penshape = numbers(*p);
    s.values = numbers(need("selection.values"));
    doc.selection = std::move(s);
  }
  if (!fields.empty())
    throw InputError("unknown key '" + fields.begin()->first + "'",
                     fields.begin()->second.second);
  return doc;
}

inline ResultDocument read_result_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open result document '" + path.string() + "'");
  try {
    return parse_result(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Tab-separated tables with a one-line header.

inline void write_benchmark_tsv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "n\tk\tphi\tmode\trep\tphi_used\tkmax\tk_hat\tseconds\tseconds_per_kmax\trand\tk_error\t"
         "status\n";
  for (const BenchmarkRow& r : rows)
    out << r.n << '\t' << r.k << '\t' << format_number(r.phi) << '\t' << phi_mode_name(r.mode)
        << '\t' << r.rep << '\t' << format_number(r.phi_used) << '\t' << r.kmax << '\t'
        << r.k_hat << '\t' << format_number(r.seconds) << '\t'
        << format_number(r.seconds_per_kmax) << '\t' << format_number(r.rand) << '\t'
        << r.k_error << '\t' << r.status << '\n';
}

/// Long format: one row per (j, t), infeasible cells written as inf.
inline void write_constrained_tsv(std::ostream& out, const ConstrainedCosts& c) {
  out << "j\tt\tbest_cost\n";
  for (int j = c.first_j(); j <= c.last_j(); ++j) {
    const auto& row = c.best_cost(j);
    for (std::size_t t = 1; t < c.n(); ++t)
      out << j << '\t' << t << '\t' << format_number(row[t]) << '\n';
  }
}

} // namespace countseg
