#include "vlnav/episode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "vlnav/controller.hpp"
#include "vlnav/errors.hpp"
#include "vlnav/feature_space.hpp"
#include "vlnav/rng.hpp"

namespace vlnav {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> codebook_classes(const Scene& scene) {
    std::vector<std::string> names = scene.class_table;
    for (const char* ambient : {"floor", "wall"}) {
        if (std::find(names.begin(), names.end(), ambient) == names.end()) {
            names.push_back(ambient);
        }
    }
    return names;
}

bool is_pure_motion(MacroName name) {
    return name == MacroName::kMoveForward || name == MacroName::kTurnLeft ||
           name == MacroName::kTurnRight;
}

}  // namespace

EpisodeResult run_episode(const EpisodeSpec& spec,
                          std::optional<VLMap>* final_map) {
    const RunConfig& cfg = spec.config;
    const Scene& scene = *spec.scene;

    EpisodeResult result;
    result.final_pose = spec.start;
    result.est_dist = std::numeric_limits<double>::quiet_NaN();
    for (const MacroAction& m : spec.program) {
        MacroLog log;
        log.macro = m;
        result.macro_logs.push_back(std::move(log));
    }

    auto finalize = [&](bool completed, const std::string& reason, Pose pose) {
        result.completed = completed;
        result.failure_reason = reason;
        result.final_pose = pose;
        result.steps = static_cast<int>(result.trajectory.size());
        result.dist_to_goal =
            spec.goal ? (pose.position() - spec.goal->center).norm() : 0.0;
        result.success =
            completed && (!spec.goal || spec.goal->contains(pose.position()));
        return result;
    };

    if (spec.program.empty()) {
        return finalize(false, "empty program", spec.start);
    }
    const auto violations = validate_program(spec.program);
    if (!violations.empty()) {
        return finalize(false, "invalid program: " + violations.front().code,
                        spec.start);
    }
    if (agent_collides(scene, spec.start.x, spec.start.y,
                       cfg.motion.agent_radius)) {
        return finalize(false, "start pose collides", spec.start);
    }

    const CodebookEncoder encoder(
        Codebook::build(codebook_classes(scene), cfg.feature_dim,
                        cfg.codebook_seed),
        scene.class_table, cfg.noise_sigma);

    // Landmark queries index the map against the ambient vocabulary plus the
    // scene's own classes; otherwise cells of off-list objects fall to
    // whichever label is randomly nearest, target included.
    LocalizerConfig localizer = cfg.localizer;
    for (const std::string& cls : scene.class_table) {
        if (std::find(localizer.default_labels.begin(),
                      localizer.default_labels.end(),
                      cls) == localizer.default_labels.end()) {
            localizer.default_labels.push_back(cls);
        }
    }

    // The agent starts at the map center facing right; the map origin is
    // placed so the start pose lands exactly on the center of cell
    // (H/2, W/2).
    const Vec2 origin{
        spec.start.x - (cfg.map.cells_w / 2 + 0.5) * cfg.map.resolution,
        spec.start.y - (cfg.map.cells_h / 2 + 0.5) * cfg.map.resolution};
    VLMap map(cfg.map, cfg.feature_dim, origin);

    PointGoalController controller(cfg.controller);
    Pose pose = spec.start;
    int macro_index = 0;
    Pose anchor = pose;
    std::optional<Waypoint> active_wp;
    bool scan_done = false;
    int scan_remaining = 0;
    std::optional<Waypoint> last_wp;
    std::string fail_reason;

    auto advance_macro = [&]() {
        result.macro_logs[macro_index].completed = true;
        ++macro_index;
        anchor = pose;
        active_wp.reset();
        scan_done = false;
        scan_remaining = 0;
        controller.reset();
    };

    auto record_step = [&](int t, Action action, std::optional<Cell> wp_cell) {
        result.trajectory.push_back({t, pose, action, macro_index, wp_cell});
        result.macro_logs[macro_index].steps += 1;
    };

    const int timeout = cfg.controller.timeout_steps;
    for (int t = 0; t < timeout && fail_reason.empty(); ++t) {
        Observation obs = render(scene, pose, cfg.camera);
        if (cfg.depth_dropout > 0.0) {
            apply_depth_dropout(obs, cfg.depth_dropout,
                                mix_seed(spec.seed, 0x64726f70ULL + t));
        }
        const FeatureImage feats = encoder.encode_observation(
            obs, mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
        const PointCloudFrame frame = attach_features(
            to_world(backproject(obs, cfg.camera), pose, cfg.camera), feats);
        map.update(frame, pose.position());

        // Ground the active macro-action against the latest map.
        const MacroAction& macro = spec.program[macro_index];
        std::optional<Waypoint> wp;
        try {
            if (is_pure_motion(macro.name)) {
                if (!active_wp) {
                    active_wp =
                        propose_waypoint(macro, map, pose, localizer, encoder);
                }
                wp = active_wp;
            } else {
                wp = propose_waypoint(macro, map, pose, localizer, encoder,
                                      anchor);
                scan_remaining = 0;
            }
        } catch (const std::runtime_error& e) {
            // Grounding failed: one in-place 360 degree scan per macro,
            // re-trying as the map grows; fail the episode afterwards.
            if (is_pure_motion(macro.name) || (scan_remaining == 0 && scan_done)) {
                fail_reason = e.what();
                break;
            }
            if (!scan_done) {
                scan_done = true;
                scan_remaining = cfg.scan_steps;
            }
            record_step(t, Action::kTurnLeft, std::nullopt);
            pose = step_agent(scene, pose, Action::kTurnLeft, cfg.motion).pose;
            --scan_remaining;
            continue;
        }

        auto& history = result.macro_logs[macro_index].waypoint_history;
        if (history.empty() || !(history.back() == wp->cell)) {
            history.push_back(wp->cell);
        }
        last_wp = wp;

        Action action;
        try {
            action = controller.next_action(pose, *wp, map);
        } catch (const NoPath& e) {
            fail_reason = e.what();
            break;
        }
        record_step(t, action, wp->cell);

        if (action == Action::kStop) {
            advance_macro();
            if (macro_index == static_cast<int>(spec.program.size())) {
                break;
            }
            continue;
        }
        const StepResult moved = step_agent(scene, pose, action, cfg.motion);
        controller.notify_collision(moved.collided);
        pose = moved.pose;
    }

    const bool completed = macro_index == static_cast<int>(spec.program.size());
    finalize(completed,
             completed ? "" : (fail_reason.empty() ? "timeout" : fail_reason),
             pose);

    // Map-estimated stop-to-goal distance: the agent cell center against the
    // last grounded waypoint.
    if (last_wp) {
        if (auto cell = map.world_to_map(pose.position())) {
            result.est_dist =
                (map.cell_center_world(*cell) - last_wp->world).norm();
        }
    }
    if (final_map != nullptr) final_map->emplace(std::move(map));
    return result;
}

std::vector<EpisodeRecord> load_episode_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open episode corpus");
    std::vector<EpisodeRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(ctx + ": " + e.what());
        }
        EpisodeRecord rec;
        if (!j.contains("id") || !j.contains("instruction")) {
            throw ParseError(ctx + ": record needs \"id\" and \"instruction\"");
        }
        rec.id = j["id"].get<std::string>();
        rec.instruction = j["instruction"].get<std::string>();
        if (j.contains("start")) {
            const auto& s = j["start"];
            if (!s.is_array() || s.size() != 3) {
                throw ParseError(ctx + ": \"start\" must be [x, y, theta_deg]");
            }
            rec.start = Pose::make(s[0].get<double>(), s[1].get<double>(),
                                   deg2rad(s[2].get<double>()));
        }
        if (j.contains("goal")) {
            const auto& g = j["goal"];
            if (!g.is_array() || g.size() != 3) {
                throw ParseError(ctx + ": \"goal\" must be [x, y, radius]");
            }
            rec.goal = GoalRegion{{g[0].get<double>(), g[1].get<double>()},
                                  g[2].get<double>()};
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<InstructionMetrics> compute_metrics(
    std::span<const EpisodeResult> results) {
    std::vector<std::string> order;
    std::map<std::string, InstructionMetrics> acc;
    std::map<std::string, std::pair<double, int>> est_acc;
    for (const EpisodeResult& r : results) {
        if (!acc.count(r.id)) {
            order.push_back(r.id);
            acc[r.id].id = r.id;
        }
        InstructionMetrics& m = acc[r.id];
        m.episodes += 1;
        m.successes += r.success ? 1 : 0;
        m.mean_dist += r.dist_to_goal;
        m.mean_steps += r.steps;
        if (std::isfinite(r.est_dist)) {
            est_acc[r.id].first += r.est_dist;
            est_acc[r.id].second += 1;
        }
    }
    std::vector<InstructionMetrics> out;
    for (const std::string& id : order) {
        InstructionMetrics m = acc[id];
        m.sr_pct = 100.0 * m.successes / m.episodes;
        m.mean_dist /= m.episodes;
        m.mean_steps /= m.episodes;
        const auto& [est_sum, est_n] = est_acc[id];
        m.mean_est = est_n > 0 ? est_sum / est_n
                               : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(m));
    }
    return out;
}

BatchResult run_batch(const std::vector<EpisodeRecord>& corpus,
                      const Scene& scene, const Grammar& grammar, int repeats,
                      std::uint64_t seed, const RunConfig& config) {
    BatchResult batch;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
        const EpisodeRecord& rec = corpus[k];
        MacroProgram program;
        try {
            program = grammar.parse_instruction(rec.instruction);
        } catch (const std::runtime_error& e) {
            for (int r = 0; r < repeats; ++r) {
                EpisodeResult failed;
                failed.id = rec.id;
                failed.failure_reason = e.what();
                failed.final_pose = rec.start;
                failed.dist_to_goal =
                    rec.goal ? (rec.start.position() - rec.goal->center).norm()
                             : 0.0;
                batch.episodes.push_back(std::move(failed));
            }
            continue;
        }
        for (int r = 0; r < repeats; ++r) {
            const std::uint64_t ep_seed =
                mix_seed(seed, fnv1a64(rec.id) + static_cast<std::uint64_t>(r));
            Rng jitter(mix_seed(ep_seed, 0x6a697474ULL));
            Pose start = rec.start;
            for (int attempt = 0; attempt < 100; ++attempt) {
                const Pose cand = Pose::make(
                    rec.start.x + jitter.uniform(-config.jitter_pos,
                                                 config.jitter_pos),
                    rec.start.y + jitter.uniform(-config.jitter_pos,
                                                 config.jitter_pos),
                    rec.start.theta + jitter.uniform(-deg2rad(config.jitter_deg),
                                                     deg2rad(config.jitter_deg)));
                if (!agent_collides(scene, cand.x, cand.y,
                                    config.motion.agent_radius)) {
                    start = cand;
                    break;
                }
            }

            EpisodeSpec spec;
            spec.scene = &scene;
            spec.program = program;
            spec.start = start;
            spec.goal = rec.goal;
            spec.seed = ep_seed;
            spec.config = config;
            EpisodeResult result = run_episode(spec);
            result.id = rec.id;
            batch.episodes.push_back(std::move(result));
        }
    }

    batch.per_instruction = compute_metrics(batch.episodes);
    // Also attach instructions to the metric rows.
    for (InstructionMetrics& m : batch.per_instruction) {
        for (const EpisodeRecord& rec : corpus) {
            if (rec.id == m.id) {
                m.instruction = rec.instruction;
                break;
            }
        }
    }

    InstructionMetrics overall;
    overall.id = "overall";
    double est_sum = 0.0;
    int est_n = 0;
    for (const EpisodeResult& r : batch.episodes) {
        overall.episodes += 1;
        overall.successes += r.success ? 1 : 0;
        overall.mean_dist += r.dist_to_goal;
        overall.mean_steps += r.steps;
        if (std::isfinite(r.est_dist)) {
            est_sum += r.est_dist;
            ++est_n;
        }
    }
    if (overall.episodes > 0) {
        overall.sr_pct = 100.0 * overall.successes / overall.episodes;
        overall.mean_dist /= overall.episodes;
        overall.mean_steps /= overall.episodes;
    }
    overall.mean_est =
        est_n > 0 ? est_sum / est_n : std::numeric_limits<double>::quiet_NaN();
    batch.overall = overall;
    return batch;
}

namespace {

ordered_json metrics_to_json(const InstructionMetrics& m, bool with_instruction) {
    ordered_json j;
    j["id"] = m.id;
    if (with_instruction) j["instruction"] = m.instruction;
    j["episodes"] = m.episodes;
    j["SR (%)"] = m.sr_pct;
    j["Dist to Goal (m)"] = m.mean_dist;
    j["Est Dist (m)"] = m.mean_est;
    j["Time steps"] = m.mean_steps;
    return j;
}

}  // namespace

ordered_json batch_to_json(const BatchResult& batch,
                           const std::string& scene_name, int repeats,
                           std::uint64_t seed) {
    ordered_json j;
    j["scene"] = scene_name;
    j["repeats"] = repeats;
    j["seed"] = seed;
    j["per_instruction"] = ordered_json::array();
    for (const InstructionMetrics& m : batch.per_instruction) {
        j["per_instruction"].push_back(metrics_to_json(m, true));
    }
    j["overall"] = metrics_to_json(batch.overall, false);
    return j;
}

void write_results_file(const BatchResult& batch, const std::string& scene_name,
                        int repeats, std::uint64_t seed,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << batch_to_json(batch, scene_name, repeats, seed).dump(2) << "\n";
}

void write_trace_file(const EpisodeResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    for (const StepRecord& s : result.trajectory) {
        ordered_json j;
        j["t"] = s.t;
        j["pose"] = {s.pose.x, s.pose.y, s.pose.theta};
        j["action"] = to_string(s.action);
        j["macro_index"] = s.macro_index;
        if (s.waypoint) {
            j["waypoint"] = {s.waypoint->u, s.waypoint->v};
        } else {
            j["waypoint"] = nullptr;
        }
        out << j.dump() << "\n";
    }
}

}  // namespace vlnav
