#include "readerbench/report.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"
#include "readerbench/service.hpp"
#include "readerbench/stats/grader_comparison.hpp"
#include "readerbench/stats/lmm.hpp"
#include "readerbench/stats/serialize.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <set>
#include <tuple>

namespace rbench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prediction sets

PredictionSet parse_prediction_set(std::string_view text, std::string dataset, std::string_view source) {
    const auto table = parse_delimited(text, source);
    if (table.header.size() != 4) {
        fail(ErrorKind::Validation, fmt::format("{}: expected columns patient_id, gold, <model A>, <model B>", source));
    }
    const std::size_t c_id = table.column("patient_id");
    const std::size_t c_gold = table.column("gold");
    if (c_id != 0 || c_gold != 1) fail(ErrorKind::Validation, fmt::format("{}: patient_id and gold must lead", source));

    struct Row {
        std::string id;
        int gold, a, b;
    };
    std::vector<Row> rows;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = fmt::format("{}:{}", source, table.line_numbers[r]);
        auto level = [&](std::size_t col) {
            const int v = parse_int_field(row[col], table.header[col], where);
            if (v < SeverityLevel::kMin || v > SeverityLevel::kMax) {
                fail(ErrorKind::Validation, fmt::format("{}: {} = {} outside 0-5", where, table.header[col], v));
            }
            return v;
        };
        if (!seen.insert(row[0]).second) fail(ErrorKind::Validation, where + ": duplicate patient_id " + row[0]);
        rows.push_back({row[0], level(1), level(2), level(3)});
    }
    if (rows.empty()) fail(ErrorKind::Validation, fmt::format("{}: no rows", source));
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.id < y.id; });

    PredictionSet set;
    set.dataset = std::move(dataset);
    set.model_a = table.header[2];
    set.model_b = table.header[3];
    for (const auto& r : rows) {
        set.patient_ids.push_back(r.id);
        set.gold.push_back(r.gold);
        set.pred_a.push_back(r.a);
        set.pred_b.push_back(r.b);
    }
    return set;
}

PredictionSet load_prediction_set(const std::filesystem::path& path) {
    return parse_prediction_set(read_text_file(path), path.stem().string(), path.string());
}

std::string format_prediction_set(const PredictionSet& set) {
    std::string out = fmt::format("patient_id,gold,{},{}\n", set.model_a, set.model_b);
    for (std::size_t i = 0; i < set.patient_ids.size(); ++i) {
        out += fmt::format("{},{},{},{}\n", set.patient_ids[i], set.gold[i], set.pred_a[i], set.pred_b[i]);
    }
    return out;
}

stats::BootstrapOptions comparison_bootstrap(const StudyConfig& config, std::string_view dataset) {
    stats::BootstrapOptions o;
    o.iterations = config.bootstrap_iterations;
    o.sample_size = config.bootstrap_sample_size;
    o.seed = derive_seed(config.seed, "model-comparison/" + std::string(dataset));
    o.threads = config.parallelism;
    return o;
}

ModelComparison compare_prediction_set(const PredictionSet& set, const stats::BootstrapOptions& options) {
    return compare_models(set.dataset, set.gold, set.pred_a, set.gold, set.pred_b, options, set.model_a, set.model_b);
}

std::string format_p(double p) { return p < 0.001 ? "<.001" : fmt::format("{:.2f}", p); }

std::string render_table1(const json& comparisons) {
    if (!comparisons.is_array() || comparisons.empty()) {
        fail(ErrorKind::Validation, "render_table1 needs at least one comparison");
    }
    std::vector<const json*> order;
    for (const auto& c : comparisons) {
        if (!c.contains("dataset")) fail(ErrorKind::Validation, "comparison without a dataset name");
        if (!c.contains("overall")) {
            fail(ErrorKind::Validation, "comparison " + c.at("dataset").get<std::string>() + " has no overall row");
        }
        order.push_back(&c);
    }
    std::stable_sort(order.begin(), order.end(), [](const json* x, const json* y) {
        return x->at("dataset").get<std::string>() < y->at("dataset").get<std::string>();
    });

    std::string out = "dataset\tscale\tmodel_a\tmodel_b\tp\n";
    for (const json* c : order) {
        const auto dataset = c->at("dataset").get<std::string>();
        const auto& overall = c->at("overall");
        out += fmt::format("{}\tOverall\t{:.4f}\t{:.4f}\t{}\n", dataset, overall.at("f1_a").get<double>(),
                           overall.at("f1_b").get<double>(), format_p(overall.at("p").get<double>()));
        const auto& scales = c->at("scales");
        if (scales.size() < 2) continue;
        for (const auto& s : scales) {
            out += fmt::format("{}\t{}\t{:.4f}\t{:.4f}\t\n", dataset, s.at("level").get<int>(),
                               s.at("f1_a").get<double>(), s.at("f1_b").get<double>());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Study report

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::string> cohort_ids(const std::vector<PatientRecord>& cohort) {
    std::vector<std::string> ids;
    for (const auto& r : cohort) ids.push_back(r.patient_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

json workload_section(const Schedule& schedule, const std::vector<GradingEvent>& events) {
    const Workload w = schedule_workload(schedule);
    std::map<std::string, std::size_t> per_clinician;
    for (const auto& c : schedule.clinicians) per_clinician[c] = 0;
    for (const auto& e : events) ++per_clinician[e.clinician_id];
    std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
    for (const auto& [id, n] : per_clinician) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    if (per_clinician.empty()) lo = 0;
    std::set<std::string> patients;
    for (const auto& e : events) {
        const auto it = schedule.alias_registry.find(e.patient_alias);
        if (it != schedule.alias_registry.end()) patients.insert(it->second);
    }

    // One event grades a patient: two images, three features per image.
    json rows = json::array();
    auto row = [&](const char* quantity, std::size_t expected, std::size_t observed_min, std::size_t observed_max) {
        rows.push_back({{"quantity", quantity},
                        {"expected", expected},
                        {"observed_min", observed_min},
                        {"observed_max", observed_max},
                        {"ok", observed_min == expected && observed_max == expected}});
    };
    row("patients", w.patients, patients.size(), patients.size());
    row("images", w.images, 2 * patients.size(), 2 * patients.size());
    row("patient_gradings_per_clinician", w.patient_gradings_per_clinician, lo, hi);
    row("image_gradings_per_clinician", w.image_gradings_per_clinician, 2 * lo, 2 * hi);
    row("feature_gradings_per_clinician", w.feature_gradings_per_clinician, 6 * lo, 6 * hi);
    return rows;
}

json timing_section(const Schedule& schedule, const std::vector<GradingEvent>& events) {
    json out;
    const auto completeness = timing_completeness(events, &schedule);
    json rows = json::array();
    std::set<std::string> eligible;
    for (const auto& c : completeness) {
        rows.push_back({{"clinician_id", c.clinician_id},
                        {"complete_rounds", c.complete_rounds},
                        {"time_eligible", c.time_eligible}});
        if (c.time_eligible) eligible.insert(c.clinician_id);
    }
    out["completeness"] = rows;
    out["eligible_clinicians"] = eligible.size();

    // Cell = (clinician, round, arm): mean seconds per patient.
    std::map<std::tuple<std::string, int, int>, std::vector<double>> cells;
    for (const auto& e : events) {
        if (!eligible.contains(e.clinician_id) || !e.elapsed_seconds) continue;
        cells[{e.clinician_id, e.round_no, static_cast<int>(e.arm)}].push_back(*e.elapsed_seconds);
    }
    json cell_rows = json::array();
    std::vector<stats::TimingRow> lmm_rows;
    std::map<std::pair<int, int>, std::vector<double>> by_round;
    for (const auto& [key, secs] : cells) {
        const auto& [clinician, round_no, arm] = key;
        const double m = mean_of(secs);
        cell_rows.push_back({{"clinician_id", clinician},
                             {"round", round_no},
                             {"arm", to_string(static_cast<Arm>(arm))},
                             {"cases", secs.size()},
                             {"mean_seconds", m}});
        lmm_rows.push_back({clinician, round_no, static_cast<Arm>(arm), m});
        by_round[{round_no, arm}].push_back(m);
    }
    out["cells"] = cell_rows;

    json round_rows = json::array();
    for (const auto& [key, means] : by_round) {
        round_rows.push_back({{"round", key.first},
                              {"arm", to_string(static_cast<Arm>(key.second))},
                              {"clinicians", means.size()},
                              {"mean_seconds", mean_of(means)},
                              {"sd_seconds", sd_of(means)}});
    }
    out["rounds"] = round_rows;

    try {
        const auto fit = stats::fit_lmm(lmm_rows);
        out["lmm"] = fit;
        out["round_effects"] = stats::lmm_round_effects(fit);
    } catch (const Error& ex) {
        out["lmm"] = {{"error", ex.what()}};
        out["round_effects"] = json::array();
    }
    return out;
}

}  // namespace

json analyze_study(const StudyInputs& in) {
    json report;
    json meta{{"tool", "reader-bench"},
              {"format", 1},
              {"seed", in.config.seed},
              {"config_digest", sha256_hex(in.config.canonical())},
              {"rules_digest", sha256_hex(format_rule_table(in.rules))}};

    if (!in.events.empty()) {
        meta["event_log_digest"] = sha256_hex(format_event_log(in.events));
        meta["schedule_digest"] = sha256_hex(json(in.schedule).dump());
        meta["cohort_digest"] = sha256_hex(format_manifest(in.cohort));
        double first = in.events.front().presented_at, last = in.events.front().submitted_at;
        for (const auto& e : in.events) {
            first = std::min(first, e.presented_at);
            last = std::max(last, e.submitted_at);
        }
        // Server-clock range of the log; the report never reads the wall clock.
        meta["timestamps"] = {{"first_presented_at", first}, {"last_submitted_at", last}};

        const auto ids = cohort_ids(in.cohort);
        const auto gold = stats::make_gold_index(in.schedule, in.cohort, in.rules);
        std::size_t expected = 0;
        for (const auto& plan : in.schedule.rounds)
            for (const auto& cr : plan.assignments)
                for (const auto& item : cr.items) expected += item.order.size();

        report["study"] = {{"clinicians", in.schedule.clinicians.size()},
                           {"patients", in.cohort.size()},
                           {"events", in.events.size()},
                           {"expected_events", expected},
                           {"audit_issues", audit_events(in.events, in.rules)},
                           {"workload", workload_section(in.schedule, in.events)}};

        json accuracy = json::array();
        for (auto target : stats::kAllTargets) {
            const auto cmp = stats::paired_grader_comparison(in.events, gold, target, ids);
            json j = cmp;
            if (in.ai_predictions) {
                const auto ai = stats::score_grades(gold, *in.ai_predictions, target, ids);
                std::size_t ai_better = 0;
                for (const auto& c : cmp.clinicians) ai_better += ai.macro_f1 > c.f1_ai ? 1 : 0;
                j["ai_alone"] = {{"f1", ai.macro_f1}, {"metrics", ai}, {"above_manual_plus_ai", ai_better}};
            }
            accuracy.push_back(std::move(j));
        }
        report["accuracy"] = accuracy;
        report["timing"] = timing_section(in.schedule, in.events);
    }

    std::vector<const PredictionSet*> sets;
    for (const auto& s : in.prediction_sets) sets.push_back(&s);
    std::sort(sets.begin(), sets.end(), [](auto* x, auto* y) { return x->dataset < y->dataset; });
    json comparisons = json::array();
    for (const auto* s : sets) {
        if (!comparisons.empty() && comparisons.back().at("dataset") == s->dataset) {
            fail(ErrorKind::Validation, "two prediction sets named " + s->dataset);
        }
        comparisons.push_back(compare_prediction_set(*s, comparison_bootstrap(in.config, s->dataset)));
    }
    report["model_comparisons"] = comparisons;
    report["metadata"] = meta;
    return report;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

std::map<std::string, std::string> render_artifacts(const json& report) {
    std::map<std::string, std::string> files;
    if (report.contains("model_comparisons") && !report.at("model_comparisons").empty()) {
        files["table1.tsv"] = render_table1(report.at("model_comparisons"));
    }
    if (report.contains("accuracy")) {
        std::string arms = "target\tclinicians\texcluded\tmean_manual\tci_manual_low\tci_manual_high\tmean_ai\t"
                           "ci_ai_low\tci_ai_high\timproved\tp\tai_alone\n";
        std::string clinician_rows = "target\tclinician_id\tf1_manual\tf1_ai\tdelta\n";
        std::string scale_rows = "target\tlevel\tf1_manual\tf1_ai\tf1_ai_alone\n";
        for (const auto& a : report.at("accuracy")) {
            const auto target = a.at("target").get<std::string>();
            const bool has_ai = a.contains("ai_alone");
            arms += fmt::format("{}\t{}\t{}\t{:.4f}\t{:.4f}\t{:.4f}\t{:.4f}\t{:.4f}\t{:.4f}\t{}\t{:.3g}\t{}\n", target,
                                a.at("clinicians").size(), a.at("excluded").size(), a.at("mean_manual").get<double>(),
                                a.at("ci_manual").at("low").get<double>(), a.at("ci_manual").at("high").get<double>(),
                                a.at("mean_ai").get<double>(), a.at("ci_ai").at("low").get<double>(),
                                a.at("ci_ai").at("high").get<double>(), a.at("improved").get<std::size_t>(),
                                a.at("test").at("p_two_sided").get<double>(),
                                has_ai ? fmt::format("{:.4f}", a.at("ai_alone").at("f1").get<double>()) : "");
            for (const auto& c : a.at("clinicians")) {
                clinician_rows += fmt::format("{}\t{}\t{:.4f}\t{:.4f}\t{:.4f}\n", target, c.at("clinician_id").get<std::string>(),
                                    c.at("f1_manual").get<double>(), c.at("f1_ai").get<double>(),
                                    c.at("delta").get<double>());
            }
            for (const auto& m : a.at("per_class")) {
                std::string ai_alone;
                if (has_ai) {
                    for (const auto& k : a.at("ai_alone").at("metrics").at("per_class")) {
                        if (k.at("label") == m.at("label")) ai_alone = fmt::format("{:.4f}", k.at("f1").get<double>());
                    }
                }
                scale_rows += fmt::format("{}\t{}\t{:.4f}\t{:.4f}\t{}\n", target, m.at("label").get<int>(),
                                    m.at("manual").get<double>(), m.at("ai").get<double>(), ai_alone);
            }
        }
        files["arm_comparison.tsv"] = arms;
        files["clinician_f1.tsv"] = clinician_rows;
        files["per_scale_f1.tsv"] = scale_rows;
    }
    if (report.contains("timing")) {
        const auto& t = report.at("timing");
        std::string rounds = "round\tarm\tclinicians\tmean_seconds\tsd_seconds\n";
        for (const auto& r : t.at("rounds")) {
            rounds += fmt::format("{}\t{}\t{}\t{:.2f}\t{:.2f}\n", r.at("round").get<int>(), r.at("arm").get<std::string>(),
                                  r.at("clinicians").get<std::size_t>(), r.at("mean_seconds").get<double>(),
                                  r.at("sd_seconds").get<double>());
        }
        std::string cells = "clinician_id\tround\tarm\tcases\tmean_seconds\n";
        for (const auto& c : t.at("cells")) {
            cells += fmt::format("{}\t{}\t{}\t{}\t{:.2f}\n", c.at("clinician_id").get<std::string>(),
                                 c.at("round").get<int>(), c.at("arm").get<std::string>(),
                                 c.at("cases").get<std::size_t>(), c.at("mean_seconds").get<double>());
        }
        std::string model = "term\testimate\tstd_error\tz\tp\tci_low\tci_high\n";
        if (t.at("lmm").contains("coefficients")) {
            for (const auto& c : t.at("lmm").at("coefficients")) {
                model += fmt::format("{}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3g}\t{:.3f}\t{:.3f}\n", c.at("name").get<std::string>(),
                                     c.at("estimate").get<double>(), c.at("std_error").get<double>(),
                                     c.at("z").get<double>(), c.at("p").get<double>(), c.at("ci_low").get<double>(),
                                     c.at("ci_high").get<double>());
            }
            for (const auto& e : t.at("round_effects")) {
                const double est = e.at("estimate").get<double>(), se = e.at("std_error").get<double>();
                model += fmt::format("ai_effect[round {}]\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3g}\t{:.3f}\t{:.3f}\n",
                                     e.at("round").get<int>(), est, se, e.at("z").get<double>(), e.at("p").get<double>(),
                                     est - stats::kWaldCritical * se, est + stats::kWaldCritical * se);
            }
            model += fmt::format("sigma_u2\t{:.3f}\t\t\t\t\t\n", t.at("lmm").at("sigma_u2").get<double>());
            model += fmt::format("sigma_e2\t{:.3f}\t\t\t\t\t\n", t.at("lmm").at("sigma_e2").get<double>());
        }
        std::string eligibility = "clinician_id\tcomplete_rounds\ttime_eligible\n";
        for (const auto& c : t.at("completeness")) {
            std::string rounds_list;
            for (const auto& r : c.at("complete_rounds")) {
                rounds_list += (rounds_list.empty() ? "" : ",") + std::to_string(r.get<int>());
            }
            eligibility += fmt::format("{}\t{}\t{}\n", c.at("clinician_id").get<std::string>(), rounds_list,
                                       c.at("time_eligible").get<bool>() ? "yes" : "no");
        }
        files["round_timing.tsv"] = rounds;
        files["clinician_timing.tsv"] = cells;
        files["timing_model.tsv"] = model;
        files["timing_completeness.tsv"] = eligibility;
    }
    if (report.contains("study")) {
        std::string w = "quantity\texpected\tobserved_min\tobserved_max\tok\n";
        for (const auto& r : report.at("study").at("workload")) {
            w += fmt::format("{}\t{}\t{}\t{}\t{}\n", r.at("quantity").get<std::string>(), r.at("expected").get<std::size_t>(),
                             r.at("observed_min").get<std::size_t>(), r.at("observed_max").get<std::size_t>(),
                             r.at("ok").get<bool>() ? "yes" : "no");
        }
        files["workload.tsv"] = w;
    }
    return files;
}

// ---------------------------------------------------------------------------
// Pipeline stages

namespace {

std::filesystem::path or_default(const std::optional<std::filesystem::path>& p, const std::filesystem::path& fallback) {
    return p ? *p : fallback;
}

std::vector<PatientRecord> load_cohort(const std::filesystem::path& out_dir, const SeverityRuleTable& rules) {
    return load_manifest(out_dir / "cohort.csv", rules);
}

std::string clinician_label(int i) { return fmt::format("C{:03d}", i + 1); }

}  // namespace

SeverityRuleTable load_rules(const StudyConfig& config) {
    return config.rules ? load_rule_table(*config.rules) : SeverityRuleTable::simplified_scale();
}

std::string format_prediction_table(const std::map<std::string, PatientGrade>& table) {
    std::string out = "patient_id,drusen_L,pigment_L,late_L,drusen_R,pigment_R,late_R\n";
    for (const auto& [id, g] : table) {
        out += fmt::format("{},{},{},{},{},{},{}\n", id, g.left.drusen, g.left.pigment, g.left.late_amd, g.right.drusen,
                           g.right.pigment, g.right.late_amd);
    }
    return out;
}

DesignOutputs run_design(const StudyConfig& config, const std::filesystem::path& out_dir,
                         const SeverityRuleTable& rules) {
    if (!config.manifest) fail(ErrorKind::Validation, "design needs a manifest");
    const auto manifest = load_manifest(*config.manifest, rules);
    DesignOutputs out;
    out.cohort = stratified_sample(manifest, config.per_level, derive_seed(config.seed, "cohort"));
    const auto batches = partition_batches(out.cohort, kProtocolBatches, derive_seed(config.seed, "batches"));
    std::vector<std::string> clinicians;
    for (int i = 0; i < config.clinicians; ++i) clinicians.push_back(clinician_label(i));
    out.schedule = apply_washout(build_crossover_schedule(batches, clinicians, derive_seed(config.seed, "schedule")),
                                 derive_seed(config.seed, "washout"));
    const auto ids = cohort_ids(out.cohort);
    out.verification = verify_schedule(out.schedule, &ids);

    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "cohort.csv", format_manifest(out.cohort));
    save_schedule(or_default(config.schedule, out_dir / "schedule.json"), out.schedule);
    write_text_file(out_dir / "verification.json", json(out.verification).dump(2) + "\n");
    return out;
}

SimulationSummary run_simulate(const StudyConfig& config, const std::filesystem::path& out_dir,
                               const SeverityRuleTable& rules, const SimulationOptions& options) {
    const auto schedule = load_schedule(or_default(config.schedule, out_dir / "schedule.json"));
    const auto cohort = load_cohort(out_dir, rules);

    PredictorBinding binding = parse_binding(config.predictor);
    binding.timeout = std::chrono::milliseconds(config.timeout_ms);
    binding.seed = derive_seed(config.seed, "predictor");
    auto predictor = make_predictor(binding);
    auto cache = std::make_shared<PredictionCache>(
        PredictionCache::precompute(*predictor, cohort, rules, config.parallelism));

    std::map<std::string, PatientGrade> ai;
    for (const auto& r : cohort) ai[r.patient_id] = cache->at(r.patient_id).prediction.grades();
    write_text_file(out_dir / "ai_predictions.csv", format_prediction_table(ai));

    const auto log_path = or_default(config.event_log, out_dir / "events.jsonl");
    std::filesystem::remove(log_path);
    ManualClock clock(0.0);
    SimulationSummary summary;
    {
        EventLog log(log_path);
        GradingService service(schedule, cohort, rules, cache, nullptr, clock, log,
                               ServiceOptions{derive_seed(config.seed, "sessions")});
        summary = simulate_study(service, clock, cohort, options);
    }
    write_text_file(out_dir / "simulation.json", json(summary).dump(2) + "\n");
    return summary;
}

json run_analyze(const StudyConfig& config, const std::filesystem::path& out_dir, const SeverityRuleTable& rules,
                 const std::vector<std::filesystem::path>& prediction_sets) {
    StudyInputs in;
    in.config = config;
    in.rules = rules;
    const auto log_path = or_default(config.event_log, out_dir / "events.jsonl");
    if (std::filesystem::exists(log_path)) {
        in.events = load_event_log(log_path);
        in.schedule = load_schedule(or_default(config.schedule, out_dir / "schedule.json"));
        in.cohort = load_cohort(out_dir, rules);
        if (std::filesystem::exists(out_dir / "ai_predictions.csv")) {
            in.ai_predictions = load_prediction_table(out_dir / "ai_predictions.csv");
        }
    } else if (prediction_sets.empty()) {
        fail(ErrorKind::Validation, "nothing to analyze: no event log at " + log_path.string() + " and no prediction sets");
    }
    for (const auto& p : prediction_sets) in.prediction_sets.push_back(load_prediction_set(p));
    auto report = analyze_study(in);
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "report.json", dump_report(report));
    return report;
}

std::vector<std::string> run_report(const std::filesystem::path& report_path, const std::filesystem::path& out_dir) {
    json report;
    try {
        report = json::parse(read_text_file(report_path));
    } catch (const json::exception& ex) {
        fail(ErrorKind::Validation, report_path.string() + ": " + ex.what());
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> names;
    for (const auto& [name, content] : render_artifacts(report)) {
        write_text_file(out_dir / name, content);
        names.push_back(name);
    }
    return names;
}

}  // namespace rbench
