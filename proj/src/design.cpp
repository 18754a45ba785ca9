#include "readerbench/design.hpp"

#include "readerbench/delimited.hpp"
#include "readerbench/error.hpp"
#include "readerbench/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace rbench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest

std::vector<PatientRecord> parse_manifest(std::string_view text, const SeverityRuleTable& rules,
                                          std::string_view source) {
    const DelimitedTable table = parse_delimited(text, source);
    const std::size_t c_id = table.column("patient_id");
    const std::array<std::size_t, 6> c_grade = {
        table.column("drusen_L"), table.column("pigment_L"), table.column("late_L"),
        table.column("drusen_R"), table.column("pigment_R"), table.column("late_R"),
    };
    const std::size_t c_img_l = table.column("image_L");
    const std::size_t c_img_r = table.column("image_R");

    std::vector<PatientRecord> records;
    std::set<std::string> ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = std::string(source) + ":" + std::to_string(table.line_numbers[r]);
        PatientRecord rec;
        rec.patient_id = row[c_id];
        if (rec.patient_id.empty()) fail(ErrorKind::Validation, where + ": empty patient_id");
        if (!ids.insert(rec.patient_id).second) {
            fail(ErrorKind::Validation, where + ": duplicate patient_id " + rec.patient_id);
        }
        rec.gold.left.drusen = parse_int_field(row[c_grade[0]], "drusen_L", where);
        rec.gold.left.pigment = parse_int_field(row[c_grade[1]], "pigment_L", where);
        rec.gold.left.late_amd = parse_int_field(row[c_grade[2]], "late_L", where);
        rec.gold.right.drusen = parse_int_field(row[c_grade[3]], "drusen_R", where);
        rec.gold.right.pigment = parse_int_field(row[c_grade[4]], "pigment_R", where);
        rec.gold.right.late_amd = parse_int_field(row[c_grade[5]], "late_R", where);
        try {
            rec.gold_severity = compute_severity(rec.gold, rules);
        } catch (const Error& e) {
            fail(ErrorKind::Validation, where + ": " + e.what());
        }
        rec.image_left = row[c_img_l];
        rec.image_right = row[c_img_r];
        if (rec.image_left.empty() || rec.image_right.empty()) {
            fail(ErrorKind::Validation, where + ": each patient needs one image per eye");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<PatientRecord> load_manifest(const std::filesystem::path& path, const SeverityRuleTable& rules) {
    return parse_manifest(read_text_file(path), rules, path.string());
}

std::string format_manifest(const std::vector<PatientRecord>& records) {
    std::ostringstream out;
    out << "patient_id,drusen_L,pigment_L,late_L,drusen_R,pigment_R,late_R,image_L,image_R\n";
    for (const auto& r : records) {
        out << r.patient_id << ',' << r.gold.left.drusen << ',' << r.gold.left.pigment << ',' << r.gold.left.late_amd
            << ',' << r.gold.right.drusen << ',' << r.gold.right.pigment << ',' << r.gold.right.late_amd << ','
            << r.image_left << ',' << r.image_right << '\n';
    }
    return out.str();
}

std::vector<PatientRecord> synthesize_manifest(std::size_t per_level, std::uint64_t seed,
                                               const SeverityRuleTable& rules) {
    std::array<std::vector<PatientGrade>, SeverityLevel::kCount> combos;
    for (const auto& row : enumerate_rule_table(rules)) combos[row.level.value()].push_back(row.grade);
    std::vector<PatientRecord> out;
    Rng rng(seed, "synthetic-manifest");
    for (int level = 0; level < SeverityLevel::kCount; ++level) {
        if (combos[level].empty()) fail(ErrorKind::Validation, "rule table never yields level " + std::to_string(level));
        for (std::size_t i = 0; i < per_level; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "S%d-%04zu", level, i + 1);
            PatientRecord rec;
            rec.patient_id = id;
            rec.gold = combos[level][rng.below(combos[level].size())];
            rec.gold_severity = SeverityLevel(level);
            rec.image_left = rec.patient_id + "_L.jpg";
            rec.image_right = rec.patient_id + "_R.jpg";
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::array<std::size_t, SeverityLevel::kCount> level_counts(const std::vector<PatientRecord>& records) {
    std::array<std::size_t, SeverityLevel::kCount> counts{};
    for (const auto& r : records) ++counts[r.gold_severity.value()];
    return counts;
}

std::string_view to_string(Arm arm) { return arm == Arm::Manual ? "Manual" : "ManualPlusAI"; }

Arm parse_arm(std::string_view text) {
    if (text == "Manual") return Arm::Manual;
    if (text == "ManualPlusAI") return Arm::ManualPlusAI;
    fail(ErrorKind::Validation, "unknown arm '" + std::string(text) + "'");
}

std::string_view to_string(OrderingPolicy policy) {
    switch (policy) {
        case OrderingPolicy::Shared: return "shared";
        case OrderingPolicy::Counterbalanced: return "counterbalanced";
        case OrderingPolicy::Randomized: return "randomized";
    }
    return "counterbalanced";
}

OrderingPolicy parse_ordering(std::string_view text) {
    if (text == "shared") return OrderingPolicy::Shared;
    if (text == "counterbalanced") return OrderingPolicy::Counterbalanced;
    if (text == "randomized") return OrderingPolicy::Randomized;
    fail(ErrorKind::Validation, "unknown ordering policy '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Cohort and batches

std::vector<PatientRecord> stratified_sample(const std::vector<PatientRecord>& manifest, std::size_t n_per_level,
                                             std::uint64_t seed) {
    std::array<std::vector<const PatientRecord*>, SeverityLevel::kCount> by_level;
    for (const auto& r : manifest) by_level[r.gold_severity.value()].push_back(&r);

    std::string shortfalls;
    for (int level = 0; level < SeverityLevel::kCount; ++level) {
        if (by_level[level].size() < n_per_level) {
            shortfalls += (shortfalls.empty() ? "" : "; ") + std::string("level ") + std::to_string(level) +
                          ": need " + std::to_string(n_per_level) + ", have " +
                          std::to_string(by_level[level].size()) + " (short " +
                          std::to_string(n_per_level - by_level[level].size()) + ")";
        }
    }
    if (!shortfalls.empty()) fail(ErrorKind::Validation, "insufficient records: " + shortfalls);

    std::vector<PatientRecord> cohort;
    cohort.reserve(n_per_level * SeverityLevel::kCount);
    for (int level = 0; level < SeverityLevel::kCount; ++level) {
        auto pool = by_level[level];
        std::sort(pool.begin(), pool.end(),
                  [](const PatientRecord* a, const PatientRecord* b) { return a->patient_id < b->patient_id; });
        Rng rng(seed, "stratified_sample", static_cast<std::uint64_t>(level));
        // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
        for (std::size_t i = 0; i < n_per_level; ++i) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        }
        std::vector<const PatientRecord*> chosen(pool.begin(), pool.begin() + static_cast<long>(n_per_level));
        std::sort(chosen.begin(), chosen.end(),
                  [](const PatientRecord* a, const PatientRecord* b) { return a->patient_id < b->patient_id; });
        for (const auto* r : chosen) cohort.push_back(*r);
    }
    return cohort;
}

namespace {

std::string batch_label(std::size_t index) {
    if (index < 26) return std::string(1, static_cast<char>('A' + index));
    return "B" + std::to_string(index + 1);
}

}  // namespace

std::vector<Batch> partition_batches(const std::vector<PatientRecord>& cohort, int k, std::uint64_t seed,
                                     PartitionOptions options) {
    if (k <= 0 || static_cast<std::size_t>(k) > cohort.size()) {
        fail(ErrorKind::Argument, "batch count " + std::to_string(k) + " invalid for cohort of " +
                                      std::to_string(cohort.size()));
    }
    if (!options.allow_remainder && cohort.size() % static_cast<std::size_t>(k) != 0) {
        fail(ErrorKind::Argument, "batch count " + std::to_string(k) + " does not divide cohort of " +
                                      std::to_string(cohort.size()));
    }
    std::set<std::string> seen;
    for (const auto& r : cohort) {
        if (!seen.insert(r.patient_id).second) {
            fail(ErrorKind::Validation, "duplicate patient in cohort: " + r.patient_id);
        }
    }

    std::vector<Batch> batches(static_cast<std::size_t>(k));
    for (std::size_t b = 0; b < batches.size(); ++b) batches[b].batch_id = batch_label(b);

    std::vector<std::vector<std::string>> groups;
    if (options.stratified) {
        groups.resize(SeverityLevel::kCount);
        for (const auto& r : cohort) groups[r.gold_severity.value()].push_back(r.patient_id);
    } else {
        groups.emplace_back();
        for (const auto& r : cohort) groups.front().push_back(r.patient_id);
    }

    // Dealing continues the same counter across groups so that batch totals
    // stay within one of each other even when a group does not divide evenly.
    std::size_t dealt = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& ids = groups[g];
        std::sort(ids.begin(), ids.end());
        Rng rng(seed, "partition", g);
        rng.shuffle(std::span<std::string>(ids));
        for (auto& id : ids) {
            batches[dealt % batches.size()].members.push_back(std::move(id));
            ++dealt;
        }
    }
    for (std::size_t b = 0; b < batches.size(); ++b) {
        Rng rng(seed, "partition-order", b);
        rng.shuffle(std::span<std::string>(batches[b].members));
    }
    return batches;
}

// ---------------------------------------------------------------------------
// Schedule

const ClinicianRound* RoundPlan::find(std::string_view clinician_id) const {
    for (const auto& a : assignments) {
        if (a.clinician_id == clinician_id) return &a;
    }
    return nullptr;
}

const RoundPlan* Schedule::round(int round_no) const {
    for (const auto& r : rounds) {
        if (r.round_no == round_no) return &r;
    }
    return nullptr;
}

const Batch* Schedule::batch(std::string_view batch_id) const {
    for (const auto& b : batches) {
        if (b.batch_id == batch_id) return &b;
    }
    return nullptr;
}

std::string Schedule::patient_for_alias(std::string_view alias) const {
    const auto it = alias_registry.find(std::string(alias));
    if (it == alias_registry.end()) fail(ErrorKind::NotFound, "unknown patient alias " + std::string(alias));
    return it->second;
}

namespace {

std::string make_alias(Rng& rng, const std::set<std::string>& taken) {
    while (true) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "P%08llx", static_cast<unsigned long long>(rng.next() & 0xffffffffULL));
        std::string alias(buf);
        if (!taken.contains(alias)) return alias;
    }
}

std::vector<std::string> presentation_order(const Batch& batch, const Schedule& s, const std::string& clinician,
                                            std::uint64_t seed, int round_no) {
    std::vector<std::string> order = batch.members;
    if (s.options.ordering != OrderingPolicy::Shared) {
        Rng rng(seed, "presentation/" + clinician + "/" + batch.batch_id, static_cast<std::uint64_t>(round_no));
        rng.shuffle(std::span<std::string>(order));
    }
    return order;
}

}  // namespace

Schedule build_crossover_schedule(const std::vector<Batch>& batches, const std::vector<std::string>& clinicians,
                                  std::uint64_t seed, ScheduleOptions options) {
    if (batches.size() != static_cast<std::size_t>(kProtocolBatches)) {
        fail(ErrorKind::Argument, "crossover protocol requires exactly 4 batches, got " +
                                      std::to_string(batches.size()));
    }
    if (clinicians.empty()) fail(ErrorKind::Argument, "at least one clinician is required");
    std::set<std::string> seen_clinicians;
    for (const auto& c : clinicians) {
        if (c.empty() || !seen_clinicians.insert(c).second) {
            fail(ErrorKind::Argument, "clinician ids must be unique and nonempty: '" + c + "'");
        }
    }
    std::set<std::string> seen_patients;
    std::set<std::string> seen_batches;
    for (const auto& b : batches) {
        if (b.members.empty()) fail(ErrorKind::Argument, "batch " + b.batch_id + " is empty");
        if (!seen_batches.insert(b.batch_id).second) fail(ErrorKind::Argument, "duplicate batch id " + b.batch_id);
        for (const auto& m : b.members) {
            if (!seen_patients.insert(m).second) {
                fail(ErrorKind::Validation, "patient " + m + " appears in more than one batch");
            }
        }
    }

    Schedule s;
    s.seed = seed;
    s.options = options;
    s.clinicians = clinicians;

    Rng alias_rng(seed, "alias");
    std::set<std::string> taken;
    for (const auto& b : batches) {
        Batch aliased{b.batch_id, {}};
        for (const auto& patient : b.members) {
            std::string alias = make_alias(alias_rng, taken);
            taken.insert(alias);
            s.alias_registry.emplace(alias, patient);
            aliased.members.push_back(std::move(alias));
        }
        s.batches.push_back(std::move(aliased));
    }

    RoundPlan r1{1, {}};
    RoundPlan r2{2, {}};
    for (std::size_t i = 0; i < clinicians.size(); ++i) {
        const std::string& c = clinicians[i];
        std::array<std::size_t, kProtocolBatches> slots = {0, 1, 2, 3};
        Arm start = Arm::Manual;
        switch (options.ordering) {
            case OrderingPolicy::Shared:
                break;
            case OrderingPolicy::Counterbalanced:
                start = i % 2 == 0 ? Arm::Manual : Arm::ManualPlusAI;
                break;
            case OrderingPolicy::Randomized: {
                Rng rng(seed, "ordering/" + c);
                rng.shuffle(std::span<std::size_t>(slots));
                start = rng.below(2) == 0 ? Arm::Manual : Arm::ManualPlusAI;
                break;
            }
        }
        auto item = [&](std::size_t slot, Arm arm, int round_no) {
            const Batch& b = s.batches[slots[slot]];
            return BatchAssignment{b.batch_id, arm, presentation_order(b, s, c, seed, round_no)};
        };
        r1.assignments.push_back({c, {item(0, start, 1), item(1, opposite(start), 1)}});
        r2.assignments.push_back({c, {item(2, opposite(start), 2), item(3, start, 2)}});
    }
    s.rounds = {std::move(r1), std::move(r2)};
    return s;
}

Schedule apply_washout(const Schedule& schedule, std::uint64_t seed) {
    if (schedule.washout || schedule.rounds.size() != 2) {
        fail(ErrorKind::Conflict, "protocol error: washout already applied or rounds 1-2 incomplete");
    }
    if (!schedule.round(1) || !schedule.round(2)) {
        fail(ErrorKind::Conflict, "protocol error: rounds 1-2 missing");
    }
    Schedule s = schedule;
    s.washout_seed = seed;
    WashoutMap washout;

    std::set<std::string> taken;
    for (const auto& [alias, patient] : s.alias_registry) taken.insert(alias);
    Rng alias_rng(seed, "washout-alias");

    const std::size_t first_new = schedule.batches.size();
    std::vector<Batch> renamed;
    for (std::size_t b = 0; b < schedule.batches.size(); ++b) {
        const Batch& old = schedule.batches[b];
        Batch fresh{batch_label(first_new + b), {}};
        washout.batch_map.emplace(old.batch_id, fresh.batch_id);
        for (const auto& alias : old.members) {
            std::string next = make_alias(alias_rng, taken);
            taken.insert(next);
            washout.alias_map.emplace(alias, next);
            s.alias_registry.emplace(next, schedule.patient_for_alias(alias));
            fresh.members.push_back(std::move(next));
        }
        Rng order_rng(seed, "washout-order", b);
        order_rng.shuffle(std::span<std::string>(fresh.members));
        renamed.push_back(std::move(fresh));
    }
    for (auto& b : renamed) s.batches.push_back(std::move(b));

    auto successor_round = [&](const RoundPlan& source, int round_no) {
        RoundPlan out{round_no, {}};
        for (const auto& cr : source.assignments) {
            ClinicianRound next{cr.clinician_id, {}};
            for (const auto& item : cr.items) {
                const Batch* b = s.batch(washout.batch_map.at(item.batch_id));
                next.items.push_back(
                    {b->batch_id, opposite(item.arm), presentation_order(*b, s, cr.clinician_id, seed, round_no)});
            }
            out.assignments.push_back(std::move(next));
        }
        return out;
    };
    s.rounds.push_back(successor_round(*schedule.round(1), 3));
    s.rounds.push_back(successor_round(*schedule.round(2), 4));
    s.washout = std::move(washout);
    return s;
}

// ---------------------------------------------------------------------------
// Verification

bool VerificationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
}

const InvariantCheck* VerificationReport::find(std::string_view name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

struct Checker {
    VerificationReport report;

    InvariantCheck& add(std::string name) {
        report.checks.push_back({std::move(name), true, {}});
        return report.checks.back();
    }

    static void flag(InvariantCheck& check, std::string offender) {
        check.passed = false;
        if (check.offenders.size() < 50) check.offenders.push_back(std::move(offender));
    }
};

std::string patient_of(const Schedule& s, const std::string& alias) {
    const auto it = s.alias_registry.find(alias);
    return it == s.alias_registry.end() ? "?" + alias : it->second;
}

}  // namespace

VerificationReport verify_schedule(const Schedule& s, const std::vector<std::string>* cohort_ids) {
    Checker ck;
    const bool washed = s.washout.has_value();

    // Phase membership: phase 1 batches are those not produced by washout.
    std::set<std::string> phase2_ids;
    if (washed) {
        for (const auto& [from, to] : s.washout->batch_map) phase2_ids.insert(to);
    }
    auto phase_of = [&](const std::string& batch_id) { return phase2_ids.contains(batch_id) ? 2 : 1; };

    {
        auto& c = ck.add("batch_ids_unique");
        std::set<std::string> ids;
        for (const auto& b : s.batches) {
            if (!ids.insert(b.batch_id).second) Checker::flag(c, "batch " + b.batch_id);
        }
    }

    // Disjointness: within a phase every patient sits in exactly one batch.
    std::array<std::map<std::string, std::vector<std::string>>, 3> patient_batches;  // [phase] patient -> batches
    {
        auto& c = ck.add("batch_disjointness");
        std::map<std::string, int> alias_uses;
        for (const auto& b : s.batches) {
            for (const auto& alias : b.members) {
                ++alias_uses[alias];
                patient_batches[phase_of(b.batch_id)][patient_of(s, alias)].push_back(b.batch_id);
            }
        }
        for (int phase = 1; phase <= 2; ++phase) {
            for (const auto& [patient, bs] : patient_batches[phase]) {
                if (bs.size() > 1) {
                    std::string where;
                    for (const auto& b : bs) where += (where.empty() ? "" : ",") + b;
                    Checker::flag(c, "patient " + patient + " in batches " + where);
                }
            }
        }
        for (const auto& [alias, n] : alias_uses) {
            if (n > 1) Checker::flag(c, "alias " + alias + " used " + std::to_string(n) + " times");
        }
    }

    {
        auto& c = ck.add("cohort_coverage");
        std::set<std::string> expected;
        if (cohort_ids) {
            expected.insert(cohort_ids->begin(), cohort_ids->end());
        } else {
            for (const auto& [alias, patient] : s.alias_registry) expected.insert(patient);
        }
        for (int phase = 1; phase <= (washed ? 2 : 1); ++phase) {
            for (const auto& p : expected) {
                if (!patient_batches[phase].contains(p)) {
                    Checker::flag(c, "phase " + std::to_string(phase) + ": patient " + p + " not in any batch");
                }
            }
            for (const auto& [p, bs] : patient_batches[phase]) {
                if (!expected.contains(p)) {
                    Checker::flag(c, "phase " + std::to_string(phase) + ": patient " + p + " not in cohort");
                }
            }
        }
    }

    {
        auto& c = ck.add("presentation_orders");
        for (const auto& r : s.rounds) {
            for (const auto& cr : r.assignments) {
                for (const auto& item : cr.items) {
                    const Batch* b = s.batch(item.batch_id);
                    if (!b) {
                        Checker::flag(c, "round " + std::to_string(r.round_no) + " " + cr.clinician_id +
                                             ": unknown batch " + item.batch_id);
                        continue;
                    }
                    auto a = item.order;
                    auto m = b->members;
                    std::sort(a.begin(), a.end());
                    std::sort(m.begin(), m.end());
                    if (a != m) {
                        Checker::flag(c, "round " + std::to_string(r.round_no) + " " + cr.clinician_id + " batch " +
                                             item.batch_id + ": order is not a permutation of members");
                    }
                }
            }
        }
    }

    const int expected_rounds = washed ? 4 : 2;
    {
        auto& c = ck.add("round_structure");
        if (static_cast<int>(s.rounds.size()) != expected_rounds) {
            Checker::flag(c, "expected " + std::to_string(expected_rounds) + " rounds, found " +
                                 std::to_string(s.rounds.size()));
        }
        for (int rn = 1; rn <= expected_rounds; ++rn) {
            const RoundPlan* r = s.round(rn);
            if (!r) {
                Checker::flag(c, "round " + std::to_string(rn) + " missing");
                continue;
            }
            for (const auto& clinician : s.clinicians) {
                const ClinicianRound* cr = r->find(clinician);
                if (!cr) {
                    Checker::flag(c, "round " + std::to_string(rn) + ": clinician " + clinician + " unassigned");
                    continue;
                }
                const auto manual = std::count_if(cr->items.begin(), cr->items.end(),
                                                  [](const BatchAssignment& i) { return i.arm == Arm::Manual; });
                if (cr->items.size() != 2 || manual != 1) {
                    Checker::flag(c, "round " + std::to_string(rn) + ": clinician " + clinician +
                                         " needs one Manual and one ManualPlusAI batch");
                }
            }
        }
    }

    auto first_arm = [&](int rn, const std::string& clinician) -> std::optional<Arm> {
        const RoundPlan* r = s.round(rn);
        if (!r) return std::nullopt;
        const ClinicianRound* cr = r->find(clinician);
        if (!cr || cr->items.empty()) return std::nullopt;
        return cr->items.front().arm;
    };

    {
        auto& c = ck.add("arm_order_alternation");
        for (const auto& clinician : s.clinicians) {
            for (int rn = 1; rn + 1 <= expected_rounds; rn += 2) {
                const auto a = first_arm(rn, clinician);
                const auto b = first_arm(rn + 1, clinician);
                if (a && b && *a == *b) {
                    Checker::flag(c, clinician + ": rounds " + std::to_string(rn) + " and " + std::to_string(rn + 1) +
                                         " both start with " + std::string(to_string(*a)));
                }
            }
        }
    }

    {
        auto& c = ck.add("first_pass_coverage");
        for (const auto& clinician : s.clinicians) {
            std::map<std::string, int> seen;
            std::array<std::size_t, 2> per_arm{};
            for (int rn = 1; rn <= 2; ++rn) {
                const RoundPlan* r = s.round(rn);
                const ClinicianRound* cr = r ? r->find(clinician) : nullptr;
                if (!cr) continue;
                for (const auto& item : cr->items) {
                    ++seen[item.batch_id];
                    per_arm[item.arm == Arm::Manual ? 0 : 1] += item.order.size();
                }
            }
            for (const auto& b : s.batches) {
                if (phase_of(b.batch_id) != 1) continue;
                if (seen[b.batch_id] != 1) {
                    Checker::flag(c, clinician + ": batch " + b.batch_id + " seen " +
                                         std::to_string(seen[b.batch_id]) + " times in rounds 1-2");
                }
            }
            if (per_arm[0] != per_arm[1]) {
                Checker::flag(c, clinician + ": rounds 1-2 arm split " + std::to_string(per_arm[0]) + "/" +
                                     std::to_string(per_arm[1]));
            }
        }
    }

    if (washed) {
        {
            auto& c = ck.add("round3_reversal");
            for (const auto& clinician : s.clinicians) {
                const auto a = first_arm(1, clinician);
                const auto b = first_arm(3, clinician);
                if (a && b && *a == *b) {
                    Checker::flag(c, clinician + ": round 3 starts with the same arm as round 1");
                }
            }
        }
        {
            auto& c = ck.add("arm_swap");
            for (const auto& clinician : s.clinicians) {
                std::map<std::string, Arm> later;
                for (int rn = 3; rn <= 4; ++rn) {
                    const RoundPlan* r = s.round(rn);
                    const ClinicianRound* cr = r ? r->find(clinician) : nullptr;
                    if (!cr) continue;
                    for (const auto& item : cr->items) later[item.batch_id] = item.arm;
                }
                for (int rn = 1; rn <= 2; ++rn) {
                    const RoundPlan* r = s.round(rn);
                    const ClinicianRound* cr = r ? r->find(clinician) : nullptr;
                    if (!cr) continue;
                    for (const auto& item : cr->items) {
                        const auto succ = s.washout->batch_map.find(item.batch_id);
                        if (succ == s.washout->batch_map.end()) {
                            Checker::flag(c, clinician + ": batch " + item.batch_id + " has no successor");
                            continue;
                        }
                        const auto it = later.find(succ->second);
                        if (it == later.end()) {
                            Checker::flag(c, clinician + ": successor " + succ->second + " of batch " +
                                                 item.batch_id + " not scheduled in rounds 3-4");
                        } else if (it->second == item.arm) {
                            Checker::flag(c, clinician + ": batch " + item.batch_id + " " +
                                                 std::string(to_string(item.arm)) + " -> " + succ->second + " " +
                                                 std::string(to_string(it->second)));
                        }
                    }
                }
            }
        }
        {
            auto& c = ck.add("washout_bijection");
            const auto& w = *s.washout;
            std::set<std::string> phase1_aliases;
            std::set<std::string> phase2_aliases;
            for (const auto& b : s.batches) {
                auto& target = phase_of(b.batch_id) == 1 ? phase1_aliases : phase2_aliases;
                target.insert(b.members.begin(), b.members.end());
            }
            std::set<std::string> images;
            for (const auto& [from, to] : w.alias_map) {
                if (!phase1_aliases.contains(from)) Checker::flag(c, "alias_map source " + from + " not in rounds 1-2");
                if (!phase2_aliases.contains(to)) Checker::flag(c, "alias_map target " + to + " not in rounds 3-4");
                if (!images.insert(to).second) Checker::flag(c, "alias " + to + " is the image of two aliases");
                if (from == to && !s.options.allow_alias_fixed_points) {
                    Checker::flag(c, "alias " + from + " maps to itself");
                }
                const auto pf = s.alias_registry.find(from);
                const auto pt = s.alias_registry.find(to);
                if (pf == s.alias_registry.end() || pt == s.alias_registry.end() || pf->second != pt->second) {
                    Checker::flag(c, "alias " + from + " -> " + to + " changes patient identity");
                }
            }
            for (const auto& a : phase1_aliases) {
                if (!w.alias_map.contains(a)) Checker::flag(c, "alias " + a + " not re-aliased");
            }
            std::set<std::string> batch_images;
            for (const auto& [from, to] : w.batch_map) {
                if (!batch_images.insert(to).second) Checker::flag(c, "batch " + to + " is the image of two batches");
                if (phase_of(from) != 1) Checker::flag(c, "batch " + from + " renamed but is not a first-pass batch");
            }
            // Successor batches must hold exactly the same patients.
            for (const auto& [from, to] : w.batch_map) {
                const Batch* a = s.batch(from);
                const Batch* b = s.batch(to);
                if (!a || !b) continue;
                std::set<std::string> pa;
                std::set<std::string> pb;
                for (const auto& m : a->members) pa.insert(patient_of(s, m));
                for (const auto& m : b->members) pb.insert(patient_of(s, m));
                if (pa != pb) Checker::flag(c, "batch " + from + " -> " + to + " changes membership");
            }
        }
    }

    {
        auto& c = ck.add(washed ? "exactly_twice_coverage" : "exactly_once_coverage");
        std::set<std::string> cohort;
        for (const auto& [alias, patient] : s.alias_registry) cohort.insert(patient);
        for (const auto& clinician : s.clinicians) {
            std::map<std::string, std::vector<Arm>> graded;
            for (const auto& r : s.rounds) {
                const ClinicianRound* cr = r.find(clinician);
                if (!cr) continue;
                for (const auto& item : cr->items) {
                    for (const auto& alias : item.order) graded[patient_of(s, alias)].push_back(item.arm);
                }
            }
            for (const auto& p : cohort) {
                const auto& arms = graded[p];
                const bool good = washed ? (arms.size() == 2 && arms[0] != arms[1]) : arms.size() == 1;
                if (!good) {
                    std::string got;
                    for (Arm a : arms) got += (got.empty() ? "" : ",") + std::string(to_string(a));
                    Checker::flag(c, clinician + ": patient " + p + " graded [" + got + "]");
                }
            }
        }
    }
    return ck.report;
}

Workload schedule_workload(const Schedule& s) {
    Workload w;
    std::set<std::string> patients;
    for (const auto& [alias, patient] : s.alias_registry) patients.insert(patient);
    w.patients = patients.size();
    w.images = 2 * w.patients;
    if (!s.clinicians.empty()) {
        const std::string& c = s.clinicians.front();
        for (const auto& r : s.rounds) {
            if (const ClinicianRound* cr = r.find(c)) {
                for (const auto& item : cr->items) w.patient_gradings_per_clinician += item.order.size();
            }
        }
    }
    w.image_gradings_per_clinician = 2 * w.patient_gradings_per_clinician;
    w.feature_gradings_per_clinician = 3 * w.image_gradings_per_clinician;
    return w;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Schedule& s) {
    json batches = json::array();
    for (const auto& b : s.batches) batches.push_back({{"batch_id", b.batch_id}, {"members", b.members}});
    json rounds = json::array();
    for (const auto& r : s.rounds) {
        json assignments = json::array();
        for (const auto& cr : r.assignments) {
            json items = json::array();
            for (const auto& item : cr.items) {
                items.push_back({{"batch_id", item.batch_id}, {"arm", to_string(item.arm)}, {"order", item.order}});
            }
            assignments.push_back({{"clinician_id", cr.clinician_id}, {"items", std::move(items)}});
        }
        rounds.push_back({{"round_no", r.round_no}, {"assignments", std::move(assignments)}});
    }
    j = json{
        {"seed", s.seed},
        {"washout_seed", s.washout_seed ? json(*s.washout_seed) : json(nullptr)},
        {"ordering", to_string(s.options.ordering)},
        {"washout_days", s.options.washout_days},
        {"allow_alias_fixed_points", s.options.allow_alias_fixed_points},
        {"clinicians", s.clinicians},
        {"batches", std::move(batches)},
        {"rounds", std::move(rounds)},
        {"washout", s.washout ? json{{"alias_map", s.washout->alias_map}, {"batch_map", s.washout->batch_map}}
                              : json(nullptr)},
        {"alias_registry", s.alias_registry},
    };
}

void from_json(const json& j, Schedule& s) {
    try {
        s = Schedule{};
        s.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("washout_seed").is_null()) s.washout_seed = j.at("washout_seed").get<std::uint64_t>();
        s.options.ordering = parse_ordering(j.at("ordering").get<std::string>());
        s.options.washout_days = j.at("washout_days").get<int>();
        s.options.allow_alias_fixed_points = j.at("allow_alias_fixed_points").get<bool>();
        s.clinicians = j.at("clinicians").get<std::vector<std::string>>();
        for (const auto& b : j.at("batches")) {
            s.batches.push_back({b.at("batch_id").get<std::string>(), b.at("members").get<std::vector<std::string>>()});
        }
        for (const auto& r : j.at("rounds")) {
            RoundPlan plan{r.at("round_no").get<int>(), {}};
            for (const auto& a : r.at("assignments")) {
                ClinicianRound cr{a.at("clinician_id").get<std::string>(), {}};
                for (const auto& item : a.at("items")) {
                    cr.items.push_back({item.at("batch_id").get<std::string>(),
                                        parse_arm(item.at("arm").get<std::string>()),
                                        item.at("order").get<std::vector<std::string>>()});
                }
                plan.assignments.push_back(std::move(cr));
            }
            s.rounds.push_back(std::move(plan));
        }
        if (!j.at("washout").is_null()) {
            WashoutMap w;
            w.alias_map = j.at("washout").at("alias_map").get<std::map<std::string, std::string>>();
            w.batch_map = j.at("washout").at("batch_map").get<std::map<std::string, std::string>>();
            s.washout = std::move(w);
        }
        s.alias_registry = j.at("alias_registry").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Validation, std::string("malformed schedule: ") + e.what());
    }
}

void to_json(json& j, const VerificationReport& report) {
    j = json::array();
    for (const auto& c : report.checks) {
        j.push_back({{"invariant", c.name}, {"passed", c.passed}, {"offenders", c.offenders}});
    }
}

Schedule load_schedule(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Validation, path.string() + ": " + e.what());
    }
    return j.get<Schedule>();
}

void save_schedule(const std::filesystem::path& path, const Schedule& schedule) {
    write_text_file(path, json(schedule).dump(1) + "\n");
}

}  // namespace rbench
