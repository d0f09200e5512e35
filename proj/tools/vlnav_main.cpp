#include <cstdio>
#include <filesystem>
#include <iostream>
#include <algorithm>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlnav/config.hpp"
#include "vlnav/episode.hpp"
#include "vlnav/errors.hpp"
#include "vlnav/instruction_parser.hpp"
#include "vlnav/localizer.hpp"
#include "vlnav/scene.hpp"

#ifndef VLNAV_DATA_DIR
#define VLNAV_DATA_DIR "data"
#endif

namespace {

using vlnav::EpisodeResult;
using vlnav::GoalRegion;
using vlnav::Pose;

std::optional<Pose> parse_pose_arg(const std::string& s) {
    double x = 0.0, y = 0.0, deg = 0.0;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &x, &y, &deg) != 3) {
        return std::nullopt;
    }
    return Pose::make(x, y, vlnav::deg2rad(deg));
}

std::optional<GoalRegion> parse_goal_arg(const std::string& s) {
    double x = 0.0, y = 0.0, r = 0.0;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &x, &y, &r) != 3) {
        return std::nullopt;
    }
    return GoalRegion{{x, y}, r};
}

nlohmann::ordered_json result_to_json(const EpisodeResult& result) {
    nlohmann::ordered_json j;
    j["success"] = result.success;
    j["completed"] = result.completed;
    j["Dist to Goal (m)"] = result.dist_to_goal;
    j["Est Dist (m)"] = result.est_dist;
    j["Time steps"] = result.steps;
    j["final_pose"] = {result.final_pose.x, result.final_pose.y,
                       result.final_pose.theta};
    if (!result.failure_reason.empty()) {
        j["failure_reason"] = result.failure_reason;
    }
    return j;
}

void export_map_files(const vlnav::VLMap& map, const std::string& dir) {
    std::filesystem::create_directories(dir);
    map.export_features(dir + "/features.bin");
    map.export_occupancy_pgm(dir + "/occupancy.pgm");
    map.export_counts_csv(dir + "/counts.csv");
}

// Label-grid dump for inspection: target cells white, other labels gray,
// unobserved black.
void export_label_pgm(const vlnav::VLMap& map, const vlnav::Scene& scene,
                      const vlnav::RunConfig& config, const std::string& label,
                      const std::string& path) {
    std::vector<std::string> names = scene.class_table;
    for (const char* ambient : {"floor", "wall"}) {
        if (std::find(names.begin(), names.end(), ambient) == names.end()) {
            names.push_back(ambient);
        }
    }
    const vlnav::CodebookEncoder encoder(
        vlnav::Codebook::build(names, config.feature_dim, config.codebook_seed),
        scene.class_table);
    std::vector<std::string> defaults = config.localizer.default_labels;
    for (const std::string& cls : scene.class_table) {
        if (std::find(defaults.begin(), defaults.end(), cls) == defaults.end()) {
            defaults.push_back(cls);
        }
    }
    const vlnav::LabelGrid grid =
        vlnav::label_map(map, label, defaults, encoder);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw vlnav::ValidationError("cannot open " + path);
    out << "P5\n" << grid.cols << " " << grid.rows << "\n255\n";
    std::vector<unsigned char> row(grid.cols);
    for (int u = 0; u < grid.rows; ++u) {
        for (int v = 0; v < grid.cols; ++v) {
            const auto l = grid.label_at({u, v});
            row[v] = l < 0 ? 0 : (l == 0 ? 255 : 96);
        }
        out.write(reinterpret_cast<const char*>(row.data()), grid.cols);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instruction-following navigation in a raycast simulator"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "config file (defaults to $VLNAV_CONFIG when set)");

    const std::string default_grammar =
        std::string(VLNAV_DATA_DIR) + "/grammar.vg";

    // parse
    auto* cmd_parse = app.add_subcommand("parse", "parse an instruction");
    std::string parse_instruction_text;
    std::string parse_grammar = default_grammar;
    cmd_parse->add_option("--instruction", parse_instruction_text, "instruction")
        ->required();
    cmd_parse->add_option("--grammar", parse_grammar, "grammar file");

    // shared run/export-map options
    struct RunArgs {
        std::string scene;
        std::string instruction;
        std::string grammar;
        std::string start;
        std::string goal;
        std::uint64_t seed{0};
        double noise{-1.0};
        std::string export_dir;
        std::string trace;
        std::string label;
    };
    auto add_run_options = [&](CLI::App* cmd, RunArgs& args) {
        cmd->add_option("--scene", args.scene, "scene file")->required();
        cmd->add_option("--instruction", args.instruction, "instruction")
            ->required();
        cmd->add_option("--grammar", args.grammar, "grammar file");
        cmd->add_option("--start", args.start, "start pose x,y,deg");
        cmd->add_option("--goal", args.goal, "goal region x,y,r");
        cmd->add_option("--seed", args.seed, "episode seed");
        cmd->add_option("--noise", args.noise, "feature noise sigma");
        cmd->add_option("--trace", args.trace, "write a JSONL step trace");
        cmd->add_option("--label", args.label,
                        "also dump the label grid for this label as PGM");
    };

    auto* cmd_run = app.add_subcommand("run", "run one episode");
    RunArgs run_args;
    run_args.grammar = default_grammar;
    add_run_options(cmd_run, run_args);
    cmd_run->add_option("--export-map", run_args.export_dir,
                        "write features.bin/occupancy.pgm/counts.csv here");

    auto* cmd_export = app.add_subcommand(
        "export-map", "run one episode and export the final map");
    RunArgs export_args;
    export_args.grammar = default_grammar;
    add_run_options(cmd_export, export_args);
    cmd_export->add_option("--out", export_args.export_dir, "output directory")
        ->required();

    // batch
    auto* cmd_batch = app.add_subcommand("batch", "run an episode corpus");
    std::string batch_scene, batch_corpus, batch_out;
    std::string batch_grammar = default_grammar;
    int batch_repeats = 5;
    std::uint64_t batch_seed = 0;
    double batch_noise = -1.0;
    cmd_batch->add_option("--scene", batch_scene, "scene file")->required();
    cmd_batch->add_option("--corpus", batch_corpus, "episode corpus JSONL")
        ->required();
    cmd_batch->add_option("--grammar", batch_grammar, "grammar file");
    cmd_batch->add_option("--repeats", batch_repeats, "runs per instruction");
    cmd_batch->add_option("--seed", batch_seed, "batch seed");
    cmd_batch->add_option("--noise", batch_noise, "feature noise sigma");
    cmd_batch->add_option("--out", batch_out, "results JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        vlnav::RunConfig config = config_path.empty()
                                      ? vlnav::run_config_from_env()
                                      : vlnav::load_run_config(config_path);

        if (cmd_parse->parsed()) {
            const vlnav::Grammar grammar = vlnav::Grammar::load(parse_grammar);
            const vlnav::MacroProgram prog =
                grammar.parse_instruction(parse_instruction_text);
            std::cout << vlnav::program_to_json(prog).dump(2) << "\n";
            return 0;
        }

        if (cmd_run->parsed() || cmd_export->parsed()) {
            RunArgs& args = cmd_run->parsed() ? run_args : export_args;
            const vlnav::Scene scene = vlnav::load_scene(args.scene);
            const vlnav::Grammar grammar = vlnav::Grammar::load(args.grammar);

            vlnav::EpisodeSpec spec;
            spec.scene = &scene;
            spec.program = grammar.parse_instruction(args.instruction);
            spec.seed = args.seed;
            spec.config = config;
            if (args.noise >= 0.0) spec.config.noise_sigma = args.noise;
            spec.start = Pose::make(scene.width / 2.0, scene.height / 2.0, 0.0);
            if (!args.start.empty()) {
                const auto p = parse_pose_arg(args.start);
                if (!p) throw vlnav::ValidationError("--start must be x,y,deg");
                spec.start = *p;
            }
            if (!args.goal.empty()) {
                const auto g = parse_goal_arg(args.goal);
                if (!g) throw vlnav::ValidationError("--goal must be x,y,r");
                spec.goal = *g;
            }

            std::optional<vlnav::VLMap> final_map;
            const EpisodeResult result = vlnav::run_episode(spec, &final_map);
            if (!args.trace.empty()) vlnav::write_trace_file(result, args.trace);
            if (!args.export_dir.empty()) {
                if (!final_map) {
                    throw vlnav::ValidationError(
                        "episode produced no map to export: " +
                        result.failure_reason);
                }
                export_map_files(*final_map, args.export_dir);
                if (!args.label.empty()) {
                    vlnav::RunConfig label_cfg = spec.config;
                    export_label_pgm(*final_map, scene, label_cfg, args.label,
                                     args.export_dir + "/label_" + args.label +
                                         ".pgm");
                }
            }
            std::cout << result_to_json(result).dump(2) << "\n";
            return result.success ? 0 : 2;
        }

        if (cmd_batch->parsed()) {
            const vlnav::Scene scene = vlnav::load_scene(batch_scene);
            const vlnav::Grammar grammar = vlnav::Grammar::load(batch_grammar);
            const auto corpus = vlnav::load_episode_corpus(batch_corpus);
            if (batch_noise >= 0.0) config.noise_sigma = batch_noise;
            const vlnav::BatchResult batch = vlnav::run_batch(
                corpus, scene, grammar, batch_repeats, batch_seed, config);
            vlnav::write_results_file(batch, batch_scene, batch_repeats,
                                      batch_seed, batch_out);
            std::cout << vlnav::batch_to_json(batch, batch_scene, batch_repeats,
                                              batch_seed)
                             .dump(2)
                      << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
