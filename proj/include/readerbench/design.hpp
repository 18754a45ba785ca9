#pragma once

// Cohort construction, batch partitioning and the four-round crossover
// schedule with washout re-aliasing.

#include "readerbench/severity.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rbench {

struct PatientRecord {
    std::string patient_id;
    PatientGrade gold;
    SeverityLevel gold_severity;
    std::string image_left;
    std::string image_right;

    const std::string& image(Eye eye) const { return eye == Eye::Left ? image_left : image_right; }
};

// Manifest columns: patient_id, drusen_L, pigment_L, late_L, drusen_R,
// pigment_R, late_R, image_L, image_R. Gold severity is derived with `rules`.
std::vector<PatientRecord> load_manifest(const std::filesystem::path& path, const SeverityRuleTable& rules);
std::vector<PatientRecord> parse_manifest(std::string_view text, const SeverityRuleTable& rules,
                                          std::string_view source = "<manifest>");
std::string format_manifest(const std::vector<PatientRecord>& records);

// Synthetic manifest with `per_level` patients at each severity level; gold
// grades are drawn uniformly from the combinations the rule table maps to
// that level. Image refs are "<id>_L.jpg" / "<id>_R.jpg".
std::vector<PatientRecord> synthesize_manifest(std::size_t per_level, std::uint64_t seed,
                                               const SeverityRuleTable& rules);

// Per-level record counts, index = severity level.
std::array<std::size_t, SeverityLevel::kCount> level_counts(const std::vector<PatientRecord>& records);

enum class Arm { Manual, ManualPlusAI };

std::string_view to_string(Arm arm);
Arm parse_arm(std::string_view text);
inline Arm opposite(Arm arm) { return arm == Arm::Manual ? Arm::ManualPlusAI : Arm::Manual; }

struct Batch {
    std::string batch_id;
    std::vector<std::string> members;
};

// Uniform selection of `n_per_level` records at every severity level.
// Output is ordered by (level, patient_id).
std::vector<PatientRecord> stratified_sample(const std::vector<PatientRecord>& manifest, std::size_t n_per_level,
                                             std::uint64_t seed);

struct PartitionOptions {
    bool stratified = true;       // deal each severity level across batches separately
    bool allow_remainder = false;  // permit batch sizes differing by one
};

// Splits the cohort into `k` disjoint batches labelled A, B, C, ...; members
// are patient ids.
std::vector<Batch> partition_batches(const std::vector<PatientRecord>& cohort, int k, std::uint64_t seed,
                                     PartitionOptions options = {});

struct BatchAssignment {
    std::string batch_id;
    Arm arm = Arm::Manual;
    std::vector<std::string> order;  // presentation order of aliases
};

struct ClinicianRound {
    std::string clinician_id;
    std::vector<BatchAssignment> items;
};

struct RoundPlan {
    int round_no = 0;
    std::vector<ClinicianRound> assignments;

    const ClinicianRound* find(std::string_view clinician_id) const;
};

struct WashoutMap {
    std::map<std::string, std::string> alias_map;  // old alias -> new alias
    std::map<std::string, std::string> batch_map;  // old batch id -> new batch id
};

// How batch->slot ordering varies between clinicians.
//   Shared:          every clinician gets the same batches, arms and order.
//   Counterbalanced: alternate clinicians start round 1 with the opposite arm.
//   Randomized:      per-clinician random batch permutation and starting arm.
enum class OrderingPolicy { Shared, Counterbalanced, Randomized };

std::string_view to_string(OrderingPolicy policy);
OrderingPolicy parse_ordering(std::string_view text);

struct ScheduleOptions {
    OrderingPolicy ordering = OrderingPolicy::Counterbalanced;
    int washout_days = 30;  // recorded only
    bool allow_alias_fixed_points = false;
};

struct Schedule {
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> washout_seed;
    ScheduleOptions options;
    std::vector<std::string> clinicians;
    std::vector<Batch> batches;  // A-D, plus E-H once washout is applied
    std::vector<RoundPlan> rounds;
    std::optional<WashoutMap> washout;
    std::map<std::string, std::string> alias_registry;  // alias -> patient id

    const RoundPlan* round(int round_no) const;
    const Batch* batch(std::string_view batch_id) const;
    std::string patient_for_alias(std::string_view alias) const;  // throws NotFound
};

inline constexpr int kProtocolBatches = 4;
inline constexpr int kProtocolRounds = 4;

// Rounds 1-2: after round 2 each clinician has seen every batch once, half
// under each arm. Batch members (patient ids) are replaced by opaque aliases.
Schedule build_crossover_schedule(const std::vector<Batch>& batches, const std::vector<std::string>& clinicians,
                                  std::uint64_t seed, ScheduleOptions options = {});

// Rounds 3-4: fresh aliases and batch ids, reshuffled order, each batch
// lineage under the opposite arm, round 3 starting with the arm round 1 did not.
Schedule apply_washout(const Schedule& schedule, std::uint64_t seed);

struct InvariantCheck {
    std::string name;
    bool passed = true;
    std::vector<std::string> offenders;
};

struct VerificationReport {
    std::vector<InvariantCheck> checks;

    bool ok() const;
    const InvariantCheck* find(std::string_view name) const;
};

// Audits every Batch/RoundPlan/Schedule invariant. When `cohort_ids` is given
// the batches must also cover exactly that set of patients.
VerificationReport verify_schedule(const Schedule& schedule,
                                   const std::vector<std::string>* cohort_ids = nullptr);

struct Workload {
    std::size_t patients = 0;
    std::size_t images = 0;
    std::size_t image_gradings_per_clinician = 0;
    std::size_t feature_gradings_per_clinician = 0;
    std::size_t patient_gradings_per_clinician = 0;
};

Workload schedule_workload(const Schedule& schedule);

void to_json(nlohmann::json& j, const Schedule& schedule);
void from_json(const nlohmann::json& j, Schedule& schedule);
void to_json(nlohmann::json& j, const VerificationReport& report);

Schedule load_schedule(const std::filesystem::path& path);
void save_schedule(const std::filesystem::path& path, const Schedule& schedule);

}  // namespace rbench
