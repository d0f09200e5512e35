#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlnav/config.hpp"
#include "vlnav/instruction_parser.hpp"
#include "vlnav/localizer.hpp"
#include "vlnav/scene.hpp"
#include "vlnav/simulator.hpp"
#include "vlnav/vl_map.hpp"

namespace vlnav {

// Evaluation-only ground truth; the pipeline itself never sees it.
struct GoalRegion {
    Vec2 center;
    double radius{0.5};

    bool contains(Vec2 p) const { return (p - center).norm() <= radius; }
};

struct EpisodeSpec {
    const Scene* scene{nullptr};
    MacroProgram program;
    Pose start;
    std::optional<GoalRegion> goal;
    std::uint64_t seed{0};
    RunConfig config;
};

struct StepRecord {
    int t{0};
    Pose pose;  // pose the action was chosen from
    Action action{Action::kStop};
    int macro_index{0};
    std::optional<Cell> waypoint;
};

struct MacroLog {
    MacroAction macro;
    std::vector<Cell> waypoint_history;  // recorded on change
    int steps{0};
    bool completed{false};
};

struct EpisodeResult {
    std::string id;
    bool completed{false};  // program ran to its final stop
    bool success{false};    // completed and stopped inside the goal region
    double dist_to_goal{0.0};
    double est_dist{0.0};  // map-estimated stop-to-waypoint distance
    int steps{0};
    Pose final_pose;
    std::vector<StepRecord> trajectory;
    std::vector<MacroLog> macro_logs;
    std::string failure_reason;
};

// Observe -> encode -> map -> ground -> act until the program finishes, the
// step budget runs out, or grounding fails beyond recovery. Runtime failures
// become failed results, never exceptions. When final_map is non-null it
// receives the episode's map for export.
EpisodeResult run_episode(const EpisodeSpec& spec,
                          std::optional<VLMap>* final_map = nullptr);

struct EpisodeRecord {
    std::string id;
    std::string instruction;
    Pose start;
    std::optional<GoalRegion> goal;
};

// JSONL: {"id": str, "instruction": str, "start": [x, y, theta_deg],
// "goal": [x, y, radius]}.
std::vector<EpisodeRecord> load_episode_corpus(const std::string& path);

struct InstructionMetrics {
    std::string id;
    std::string instruction;
    int episodes{0};
    int successes{0};
    double sr_pct{0.0};
    double mean_dist{0.0};
    double mean_est{0.0};
    double mean_steps{0.0};
};

struct BatchResult {
    std::vector<InstructionMetrics> per_instruction;
    InstructionMetrics overall;
    std::vector<EpisodeResult> episodes;
};

// Grouping is order-invariant; ids appear in first-seen order.
std::vector<InstructionMetrics> compute_metrics(
    std::span<const EpisodeResult> results);

// Every record x repeats with seeded start jitter (+-jitter_pos m,
// +-jitter_deg). Per-episode failures are recorded and the batch continues.
BatchResult run_batch(const std::vector<EpisodeRecord>& corpus,
                      const Scene& scene, const Grammar& grammar, int repeats,
                      std::uint64_t seed, const RunConfig& config);

nlohmann::ordered_json batch_to_json(const BatchResult& batch,
                                     const std::string& scene_name,
                                     int repeats, std::uint64_t seed);
void write_results_file(const BatchResult& batch, const std::string& scene_name,
                        int repeats, std::uint64_t seed,
                        const std::string& path);
void write_trace_file(const EpisodeResult& result, const std::string& path);

}  // namespace vlnav
