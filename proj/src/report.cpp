#include "qrefine/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

#include "qrefine/error.hpp"

namespace qrefine {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view aspect_heading(QualityAspect aspect) {
  switch (aspect) {
    case QualityAspect::security: return "Insecure";
    case QualityAspect::readability: return "Convention";
    case QualityAspect::functionality: return "Error";
    case QualityAspect::reliability: return "Warning";
    case QualityAspect::maintainability: return "Refactor";
  }
  return "?";
}

namespace {

std::string_view aspect_title(QualityAspect aspect) {
  switch (aspect) {
    case QualityAspect::security: return "Security";
    case QualityAspect::readability: return "Readability";
    case QualityAspect::functionality: return "Functionality";
    case QualityAspect::reliability: return "Reliability";
    case QualityAspect::maintainability: return "Maintainability";
  }
  return "?";
}

int max_iterations_of(const TraceFile& trace) {
  const auto& config = trace.header.config;
  if (config.is_object() && config.contains("loop") && config.at("loop").contains("max_iterations")) {
    return config.at("loop").at("max_iterations").get<int>();
  }
  std::size_t longest = 0;
  for (const auto& r : trace.records) longest = std::max(longest, r.traces.size());
  return static_cast<int>(longest);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json cell_json(const CorrelationCell& c) {
  return json{{"rho", optional_json(c.rho)}, {"p_value", optional_json(c.p_value)}, {"samples", c.samples}};
}

CorrelationCell cell_from_json(const json& j) {
  return CorrelationCell{optional_double(j.at("rho")), optional_double(j.at("p_value")),
                         j.at("samples").get<std::size_t>()};
}

json configuration_json(const ConfigurationAnalytics& c) {
  json aspects = json::array();
  for (const auto& a : c.aspects) {
    aspects.push_back({{"aspect", to_string(a.aspect)},
                       {"pct_initial", a.pct_initial},
                       {"pct_after", a.pct_after},
                       {"problems_initial", a.problems_initial},
                       {"problems_after", a.problems_after},
                       {"count_initial", a.count_initial},
                       {"count_after", a.count_after}});
  }
  json issues = json::array();
  for (const auto& s : c.issues) {
    issues.push_back({{"code", s.code},
                      {"aspect", to_string(s.aspect)},
                      {"initial_count", s.initial_count},
                      {"after_count", s.after_count},
                      {"resolution_rate", optional_json(s.resolution_rate)},
                      {"times_introduced", s.times_introduced},
                      {"avg_change", optional_json(s.avg_change)}});
  }
  json categories = json::array();
  for (const auto& k : c.categories) {
    categories.push_back({{"aspect", to_string(k.aspect)},
                          {"times_introduced", k.times_introduced},
                          {"codes_introduced", k.codes_introduced},
                          {"avg_change", optional_json(k.avg_change)}});
  }
  json curve = json::array();
  for (const auto& p : c.curve) {
    curve.push_back({{"iteration_index", p.iteration_index},
                     {"mean_total_severity", p.mean_total_severity},
                     {"probability_of_improvement", p.probability_of_improvement},
                     {"active_runs", p.active_runs},
                     {"improvements", p.improvements}});
  }
  json matrix = json::array();
  for (const auto& row : c.selection_effects.cells) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell_json(cell));
    matrix.push_back(std::move(r));
  }
  const auto& k = c.correctness;
  return json{{"label", c.label},
              {"source", c.source},
              {"max_iterations", c.max_iterations},
              {"problems", c.problems},
              {"scored", c.scored},
              {"aborted", c.aborted},
              {"aspects", aspects},
              {"correctness",
               {{"tested", k.tested},
                {"passing_initial", k.passing_initial},
                {"passing_after", k.passing_after},
                {"initial_pct", k.initial_pct},
                {"after_pct", k.after_pct},
                {"change", k.change}}},
              {"issues", issues},
              {"categories", categories},
              {"curve", curve},
              {"initial_final_correlation", cell_json(c.initial_final)},
              {"selection_effects", {{"samples", c.selection_effects.samples}, {"cells", matrix}}}};
}

ConfigurationAnalytics configuration_from_json(const json& j) {
  ConfigurationAnalytics c;
  c.label = j.at("label").get<std::string>();
  c.source = j.at("source").get<std::string>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.problems = j.at("problems").get<std::size_t>();
  c.scored = j.at("scored").get<std::size_t>();
  c.aborted = j.at("aborted").get<std::size_t>();
  for (const auto& a : j.at("aspects")) {
    c.aspects.push_back({parse_aspect(a.at("aspect").get<std::string>()), a.at("pct_initial").get<double>(),
                         a.at("pct_after").get<double>(), a.at("problems_initial").get<std::size_t>(),
                         a.at("problems_after").get<std::size_t>(), a.at("count_initial").get<std::size_t>(),
                         a.at("count_after").get<std::size_t>()});
  }
  const auto& k = j.at("correctness");
  c.correctness = {k.at("tested").get<std::size_t>(),    k.at("passing_initial").get<std::size_t>(),
                   k.at("passing_after").get<std::size_t>(), k.at("initial_pct").get<double>(),
                   k.at("after_pct").get<double>(),        k.at("change").get<double>()};
  for (const auto& s : j.at("issues")) {
    c.issues.push_back({s.at("code").get<std::string>(), parse_aspect(s.at("aspect").get<std::string>()),
                        s.at("initial_count").get<std::size_t>(), s.at("after_count").get<std::size_t>(),
                        optional_double(s.at("resolution_rate")), s.at("times_introduced").get<std::size_t>(),
                        optional_double(s.at("avg_change"))});
  }
  for (const auto& x : j.at("categories")) {
    c.categories.push_back({parse_aspect(x.at("aspect").get<std::string>()),
                            x.at("times_introduced").get<std::size_t>(), x.at("codes_introduced").get<std::size_t>(),
                            optional_double(x.at("avg_change"))});
  }
  for (const auto& p : j.at("curve")) {
    c.curve.push_back({p.at("iteration_index").get<int>(), p.at("mean_total_severity").get<double>(),
                       p.at("probability_of_improvement").get<double>(), p.at("active_runs").get<std::size_t>(),
                       p.at("improvements").get<std::size_t>()});
  }
  c.initial_final = cell_from_json(j.at("initial_final_correlation"));
  const auto& m = j.at("selection_effects");
  c.selection_effects.samples = m.at("samples").get<std::size_t>();
  const auto& cells = m.at("cells");
  if (cells.size() != 5) throw Error(Errc::parse_error, "selection effect matrix must be 5x5");
  for (std::size_t a = 0; a < 5; ++a) {
    if (cells.at(a).size() != 5) throw Error(Errc::parse_error, "selection effect matrix must be 5x5");
    for (std::size_t b = 0; b < 5; ++b) c.selection_effects.cells[a][b] = cell_from_json(cells.at(a).at(b));
  }
  return c;
}

// Left-aligned first column, right-aligned others.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> headers) : rows_{std::move(headers)} {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> widths;
    for (const auto& row : rows_) {
      widths.resize(std::max(widths.size(), row.size()), 0);
      for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::string out;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      std::string line;
      for (std::size_t i = 0; i < rows_[r].size(); ++i) {
        if (i > 0) line += "  ";
        line += i == 0 ? fmt::format("{:<{}}", rows_[r][i], widths[i]) : fmt::format("{:>{}}", rows_[r][i], widths[i]);
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
      if (r == 0) {
        std::size_t total = 0;
        for (auto w : widths) total += w;
        out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string fixed(double v, int digits = 2) { return fmt::format("{:.{}f}", v, digits); }
std::string signed_fixed(double v, int digits = 2) { return fmt::format("{:+.{}f}", v, digits); }
std::string maybe(const std::optional<double>& v, int digits = 2) { return v ? fixed(*v, digits) : "-"; }
std::string maybe_signed(const std::optional<double>& v, int digits = 2) { return v ? signed_fixed(*v, digits) : "-"; }

void section(std::string& out, const std::string& title) {
  out += "\n" + title + "\n";
}

std::string series_name(const ConfigurationAnalytics& c) { return "select_" + c.label; }

std::string csv_value(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
}

}  // namespace

ConfigurationAnalytics analyze_trace(const TraceFile& trace, const std::string& source, const ReportOptions& options) {
  ConfigurationAnalytics c;
  c.label = trace.header.issues_selected;
  c.source = source;
  c.max_iterations = max_iterations_of(trace);
  const auto& records = trace.records;
  c.problems = records.size();
  for (const auto& r : records) {
    if (r.status == RunStatus::aborted) ++c.aborted;
  }
  c.scored = c.problems - c.aborted;
  c.aspects = aspect_summary(records);
  c.correctness = correctness_summary(records);
  c.issues = issue_stats(records, options.min_occurrences);
  c.categories = category_introduction(records);
  c.curve = curves(records, c.max_iterations);
  c.initial_final = initial_final_correlation(records, {options.permutations, options.seed, options.parallel});
  c.selection_effects = selection_effects(records);
  return c;
}

json to_json(const Report& report) {
  json configs = json::array();
  for (const auto& c : report.configurations) configs.push_back(configuration_json(c));
  return json{{"options",
               {{"min_occurrences", report.options.min_occurrences},
                {"permutations", report.options.permutations},
                {"seed", report.options.seed},
                {"top_k", report.options.top_k}}},
              {"configurations", configs}};
}

Report report_from_json(const json& j) {
  try {
    Report r;
    const auto& o = j.at("options");
    r.options.min_occurrences = o.at("min_occurrences").get<std::size_t>();
    r.options.permutations = o.at("permutations").get<std::size_t>();
    r.options.seed = o.at("seed").get<std::uint64_t>();
    r.options.top_k = o.at("top_k").get<std::size_t>();
    for (const auto& c : j.at("configurations")) r.configurations.push_back(configuration_from_json(c));
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed report document: ") + e.what());
  }
}

std::string render_text(const Report& report) {
  std::string out = "Refinement report\n=================\n";
  section(out, "Configurations");
  for (const auto& c : report.configurations) {
    out += fmt::format("  Selected {}: {} ({} problems, {} scored, {} aborted, at most {} iterations)\n", c.label,
                       c.source, c.problems, c.scored, c.aborted, c.max_iterations);
  }

  section(out, "Issue prevalence: % of snippets with at least one issue (I = initial, A = after refinement)");
  std::vector<std::string> headers{"Selected"};
  for (auto a : kAllAspects) {
    headers.push_back(std::string(aspect_heading(a)) + "(I)");
    headers.push_back(std::string(aspect_heading(a)) + "(A)");
  }
  TextTable prevalence(headers);
  for (const auto& c : report.configurations) {
    std::vector<std::string> row{c.label};
    for (const auto& a : c.aspects) {
      row.push_back(fixed(a.pct_initial));
      row.push_back(fixed(a.pct_after));
    }
    prevalence.add(row);
  }
  out += prevalence.render();

  section(out, "Issue counts by aspect");
  TextTable counts({"Selected", "Aspect", "Initial", "After"});
  for (const auto& c : report.configurations) {
    for (const auto& a : c.aspects) {
      counts.add({c.label, std::string(aspect_title(a.aspect)), std::to_string(a.count_initial),
                  std::to_string(a.count_after)});
    }
  }
  out += counts.render();

  section(out, "Functional correctness (problems with tests)");
  TextTable correctness({"Selected", "Tested", "Initial(%)", "After(%)", "Change"});
  for (const auto& c : report.configurations) {
    const auto& k = c.correctness;
    correctness.add({c.label, std::to_string(k.tested), fixed(k.initial_pct), fixed(k.after_pct), signed_fixed(k.change)});
  }
  out += correctness.render();

  section(out, fmt::format("Spearman correlation between initial and final issue counts ({} permutations)",
                           report.options.permutations));
  TextTable spearman({"Selected", "rho", "p-value", "n"});
  for (const auto& c : report.configurations) {
    spearman.add({c.label, maybe(c.initial_final.rho, 3), maybe(c.initial_final.p_value, 4),
                  std::to_string(c.initial_final.samples)});
  }
  out += spearman.render();

  for (const auto& c : report.configurations) {
    out += fmt::format("\n--- Selected {} ---\n", c.label);

    section(out, fmt::format("Top {} introduced issue types per category", report.options.top_k));
    TextTable introduced({"Category", "Code", "Times introduced", "Avg. change"});
    for (auto aspect : kAllAspects) {
      std::vector<IssueStat> ranked;
      for (const auto& s : c.issues) {
        if (s.aspect == aspect && s.times_introduced > 0) ranked.push_back(s);
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const IssueStat& a, const IssueStat& b) { return a.times_introduced > b.times_introduced; });
      if (ranked.size() > report.options.top_k) ranked.resize(report.options.top_k);
      for (const auto& s : ranked) {
        introduced.add({std::string(aspect_title(aspect)), s.code, std::to_string(s.times_introduced),
                        maybe_signed(s.avg_change, 3)});
      }
    }
    out += introduced.render();

    section(out, "Issue introduction by category");
    TextTable categories({"Category", "Times introduced", "Codes introduced", "Avg. change"});
    for (const auto& k : c.categories) {
      categories.add({std::string(aspect_title(k.aspect)), std::to_string(k.times_introduced),
                      std::to_string(k.codes_introduced), maybe_signed(k.avg_change, 3)});
    }
    out += categories.render();

    section(out, fmt::format("Highest resolution rates (issues with at least {} initial occurrences)",
                             report.options.min_occurrences));
    std::vector<IssueStat> resolved;
    for (const auto& s : c.issues) {
      if (s.resolution_rate) resolved.push_back(s);
    }
    std::stable_sort(resolved.begin(), resolved.end(), [](const IssueStat& a, const IssueStat& b) {
      if (*a.resolution_rate != *b.resolution_rate) return *a.resolution_rate > *b.resolution_rate;
      return a.initial_count > b.initial_count;
    });
    if (resolved.size() > 10) resolved.resize(10);
    TextTable resolution({"Code", "Aspect", "Initial", "After", "Resolution rate"});
    for (const auto& s : resolved) {
      resolution.add({s.code, std::string(aspect_title(s.aspect)), std::to_string(s.initial_count),
                      std::to_string(s.after_count), fixed(*s.resolution_rate)});
    }
    out += resolution.render();

    section(out, "Issue counts by code");
    TextTable codes({"Code", "Aspect", "Initial", "After"});
    bool import_errors = false;
    for (const auto& s : c.issues) {
      codes.add({s.code, std::string(aspect_title(s.aspect)), std::to_string(s.initial_count),
                 std::to_string(s.after_count)});
      import_errors = import_errors || (s.code == "E0401" && s.initial_count + s.after_count > 0);
    }
    out += codes.render();
    if (import_errors) {
      out += "Note: E0401 (import-error) is counted, but it may reflect packages missing from the analysis "
             "environment rather than defects in the code.\n";
    }

    section(out, fmt::format("Selection effects: rows = aspect selected, columns = change in aspect count ({} samples)",
                             c.selection_effects.samples));
    std::vector<std::string> matrix_headers{"Selected"};
    for (auto a : kAllAspects) matrix_headers.push_back(std::string(aspect_title(a)));
    TextTable matrix(matrix_headers);
    for (std::size_t a = 0; a < 5; ++a) {
      std::vector<std::string> row{std::string(aspect_title(kAllAspects[a]))};
      for (std::size_t b = 0; b < 5; ++b) row.push_back(maybe(c.selection_effects.cells[a][b].rho, 3));
      matrix.add(row);
    }
    out += matrix.render();

    section(out, "Per-iteration curves");
    TextTable curve({"Iteration", "Mean severity", "P(improvement)", "Active runs"});
    for (const auto& p : c.curve) {
      curve.add({std::to_string(p.iteration_index), fixed(p.mean_total_severity, 3),
                 fixed(p.probability_of_improvement, 3), std::to_string(p.active_runs)});
    }
    out += curve.render();
  }
  return out;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::text;
  if (text == "structured") return ReportFormat::structured;
  if (text == "plot-data") return ReportFormat::plot_data;
  throw Error(Errc::invalid_argument, "unknown report format '" + std::string(text) + "'");
}

std::vector<fs::path> write_report(const Report& report, ReportFormat format, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_text_file(out_dir / name, content);
    written.push_back(out_dir / name);
  };
  switch (format) {
    case ReportFormat::text:
      emit("report.txt", render_text(report));
      break;
    case ReportFormat::structured:
      emit("report.json", to_json(report).dump(2) + "\n");
      break;
    case ReportFormat::plot_data: {
      int longest = 0;
      for (const auto& c : report.configurations) longest = std::max(longest, c.max_iterations);
      auto series = [&](auto value) {
        std::string csv = "iteration";
        for (const auto& c : report.configurations) csv += "," + series_name(c);
        csv += "\n";
        for (int i = 0; i <= longest; ++i) {
          csv += std::to_string(i);
          for (const auto& c : report.configurations) {
            csv += ",";
            if (static_cast<std::size_t>(i) < c.curve.size()) csv += value(c.curve[static_cast<std::size_t>(i)]);
          }
          csv += "\n";
        }
        return csv;
      };
      emit("mean_severity.csv", series([](const CurvePoint& p) { return fmt::format("{}", p.mean_total_severity); }));
      emit("probability_of_improvement.csv",
           series([](const CurvePoint& p) { return fmt::format("{}", p.probability_of_improvement); }));
      emit("active_runs.csv", series([](const CurvePoint& p) { return std::to_string(p.active_runs); }));

      std::string aspects = "configuration,aspect,count_initial,count_after,pct_initial,pct_after\n";
      std::string codes = "configuration,code,aspect,initial_count,after_count,times_introduced\n";
      for (const auto& c : report.configurations) {
        for (const auto& a : c.aspects) {
          aspects += fmt::format("{},{},{},{},{},{}\n", series_name(c), to_string(a.aspect), a.count_initial,
                                 a.count_after, a.pct_initial, a.pct_after);
        }
        for (const auto& s : c.issues) {
          codes += fmt::format("{},{},{},{},{},{}\n", series_name(c), s.code, to_string(s.aspect), s.initial_count,
                               s.after_count, s.times_introduced);
        }
        std::string matrix = "selected";
        for (auto a : kAllAspects) matrix += "," + std::string(to_string(a));
        matrix += "\n";
        for (std::size_t a = 0; a < 5; ++a) {
          matrix += std::string(to_string(kAllAspects[a]));
          for (std::size_t b = 0; b < 5; ++b) matrix += "," + csv_value(c.selection_effects.cells[a][b].rho);
          matrix += "\n";
        }
        emit("selection_effects_" + series_name(c) + ".csv", matrix);
      }
      emit("aspect_distribution.csv", aspects);
      emit("issue_distribution.csv", codes);
      break;
    }
  }
  return written;
}

}  // namespace qrefine
