#include "gazeaffect/experiment.hpp"

#include "csv.hpp"
#include "gazeaffect/error.hpp"
#include "gazeaffect/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace gazeaffect {

namespace {

const std::vector<std::string> kColumns{"dimension",     "modality",       "network",  "shift_frames",
                                        "seed",          "learning_rate",  "validation_ccc", "test_ccc",
                                        "train_corpus",  "test_corpus",    "test_shift_frames", "selected"};

std::string ccc_cell(double v) { return std::isnan(v) ? "div" : format_decimal(v); }

std::string fixed3(double v) {
    if (std::isnan(v)) return "div";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void check_name(const std::string& name) {
    if (name.find_first_of(",\n\r\"") != std::string::npos) {
        throw DataError("corpus name '" + name + "' cannot be written to a results CSV");
    }
}

template <typename T>
T parse_unsigned(const std::string& cell, std::size_t line, const char* column) {
    T v{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw DataError("results line " + std::to_string(line) + ": bad " + column + " '" + cell + "'");
    }
    return v;
}

double parse_double(const std::string& cell, std::size_t line, const char* column) {
    const auto v = csv::parse_number(cell);
    if (!v) throw DataError("results line " + std::to_string(line) + ": bad " + column + " '" + cell + "'");
    return *v;
}

auto sort_key(const ResultRow& r) {
    return std::make_tuple(r.dimension, r.modality, r.network, r.shift_frames, r.train_corpus, r.test_corpus,
                           r.test_shift_frames, r.learning_rate, r.seed);
}

std::string markdown(const ResultsTable& sorted) {
    std::vector<const ResultRow*> shown;
    for (const auto& r : sorted.rows) {
        if (r.selected) shown.push_back(&r);
    }
    // A table without selection flags is shown in full.
    if (shown.empty()) {
        for (const auto& r : sorted.rows) shown.push_back(&r);
    }

    std::map<Dimension, double> best_val;
    std::map<Dimension, double> best_test;
    for (const auto* r : shown) {
        if (!std::isnan(r->validation_ccc) &&
            (!best_val.contains(r->dimension) || r->validation_ccc > best_val[r->dimension])) {
            best_val[r->dimension] = r->validation_ccc;
        }
        if (r->test_ccc && !std::isnan(*r->test_ccc) &&
            (!best_test.contains(r->dimension) || *r->test_ccc > best_test[r->dimension])) {
            best_test[r->dimension] = *r->test_ccc;
        }
    }
    auto emphasize = [](const std::string& s, bool best) { return best ? "**" + s + "**" : s; };

    std::string out =
        "| Dimension | Modality | Network | Shift | Seed | Learning rate | Validation CCC | Test CCC | Train corpus | "
        "Test corpus | Test shift |\n"
        "|---|---|---|---:|---:|---:|---:|---:|---|---|---:|\n";
    for (const auto* r : shown) {
        const bool val_best = best_val.contains(r->dimension) && r->validation_ccc == best_val[r->dimension];
        const bool test_best = r->test_ccc && best_test.contains(r->dimension) && *r->test_ccc == best_test[r->dimension];
        out += "| " + std::string(to_string(r->dimension)) + " | " + std::string(to_string(r->modality)) + " | " +
               std::string(to_string(r->network)) + " | " + std::to_string(r->shift_frames) + " | " +
               std::to_string(r->seed) + " | " + format_decimal(r->learning_rate) + " | " +
               emphasize(fixed3(r->validation_ccc), val_best) + " | " +
               (r->test_ccc ? emphasize(fixed3(*r->test_ccc), test_best) : std::string("-")) + " | " +
               r->train_corpus + " | " + r->test_corpus + " | " + std::to_string(r->test_shift_frames) + " |\n";
    }

    // Fused against the better unimodal cell, per network and corpus pair.
    using Group = std::tuple<Dimension, LayerKind, std::string, std::string>;
    std::map<Group, std::map<Modality, double>> groups;
    for (const auto* r : shown) {
        if (!r->selected || std::isnan(r->validation_ccc)) continue;
        groups[{r->dimension, r->network, r->train_corpus, r->test_corpus}][r->modality] = r->validation_ccc;
    }
    std::string footer;
    for (const auto& [g, by] : groups) {
        const auto fused = by.find(Modality::fused);
        if (fused == by.end()) continue;
        std::optional<std::pair<Modality, double>> base;
        for (auto m : {Modality::speech, Modality::gaze}) {
            if (auto it = by.find(m); it != by.end() && (!base || it->second > base->second)) base = *it;
        }
        if (!base || base->second == 0.0) continue;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * relative_improvement(fused->second, base->second));
        footer += "- " + std::string(to_string(std::get<0>(g))) + " " + std::string(to_string(std::get<1>(g))) +
                  " (" + std::get<2>(g) + "): fused " + fixed3(fused->second) + " vs " +
                  std::string(to_string(base->first)) + " " + fixed3(base->second) + ", " + buf + "\n";
    }
    if (!footer.empty()) {
        out += "\nRelative improvement of fused over the best unimodal validation CCC:\n\n" + footer;
    }
    return out;
}

}  // namespace

void sort_results(ResultsTable& table) {
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const ResultRow& a, const ResultRow& b) { return sort_key(a) < sort_key(b); });
}

std::string render_report(const ResultsTable& table, ReportFormat format) {
    if (table.rows.empty()) {
        throw ConfigError("cannot render a report from an empty results table");
    }
    ResultsTable sorted = table;
    sort_results(sorted);
    if (format == ReportFormat::markdown) return markdown(sorted);

    std::string out = csv::join(kColumns) + "\n";
    for (const auto& r : sorted.rows) {
        check_name(r.train_corpus);
        check_name(r.test_corpus);
        out += csv::join({std::string(to_string(r.dimension)), std::string(to_string(r.modality)),
                          std::string(to_string(r.network)), std::to_string(r.shift_frames), std::to_string(r.seed),
                          format_decimal(r.learning_rate), ccc_cell(r.validation_ccc),
                          r.test_ccc ? ccc_cell(*r.test_ccc) : std::string(), r.train_corpus, r.test_corpus,
                          std::to_string(r.test_shift_frames), r.selected ? "1" : "0"}) +
               "\n";
    }
    return out;
}

void save_results_csv(const ResultsTable& table, const std::filesystem::path& path) {
    csv::write_text(path, render_report(table, ReportFormat::csv));
}

ResultsTable load_results_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    if (t.rows.empty() || t.rows.front().cells != kColumns) {
        throw DataError("results file " + path.string() + " does not have the expected header");
    }
    ResultsTable out;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const auto& c = row.cells;
        if (c.size() != kColumns.size()) {
            throw DataError("results line " + std::to_string(row.line) + ": expected " +
                            std::to_string(kColumns.size()) + " cells, got " + std::to_string(c.size()));
        }
        ResultRow r;
        try {
            r.dimension = parse_dimension(c[0]);
            r.modality = parse_modality(c[1]);
            r.network = parse_layer_kind(c[2]);
        } catch (const ConfigError& e) {
            throw DataError("results line " + std::to_string(row.line) + ": " + e.what());
        }
        r.shift_frames = parse_unsigned<std::size_t>(c[3], row.line, "shift_frames");
        r.seed = parse_unsigned<std::uint64_t>(c[4], row.line, "seed");
        r.learning_rate = parse_double(c[5], row.line, "learning_rate");
        r.validation_ccc = c[6] == "div" ? std::nan("") : parse_double(c[6], row.line, "validation_ccc");
        if (!c[7].empty()) r.test_ccc = c[7] == "div" ? std::nan("") : parse_double(c[7], row.line, "test_ccc");
        r.train_corpus = c[8];
        r.test_corpus = c[9];
        r.test_shift_frames = parse_unsigned<std::size_t>(c[10], row.line, "test_shift_frames");
        if (c[11] != "0" && c[11] != "1") {
            throw DataError("results line " + std::to_string(row.line) + ": selected must be 0 or 1");
        }
        r.selected = c[11] == "1";
        out.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace gazeaffect
