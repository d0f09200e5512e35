// Acceptance suite: one criterion per section, one PASS/FAIL line each.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "vlnav/config.hpp"
#include "vlnav/controller.hpp"
#include "vlnav/episode.hpp"
#include "vlnav/feature_space.hpp"
#include "vlnav/instruction_parser.hpp"
#include "vlnav/localizer.hpp"
#include "vlnav/rng.hpp"
#include "vlnav/scene.hpp"
#include "vlnav/simulator.hpp"
#include "vlnav/vl_map.hpp"

using namespace vlnav;
namespace oracle = vlnav::testing;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
    std::printf("[%s] %2d. %-28s %s\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str());
    if (!pass) ++failures;
}

std::string data_path(const std::string& name) {
    return std::string(VLNAV_DATA_DIR) + "/" + name;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_geometry() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;

    // Back-projection against the explicit K^-1 oracle.
    for (int k = 0; k < 1000; ++k) {
        CameraConfig cam;
        cam.fx = rng.uniform(30.0, 400.0);
        cam.fy = rng.uniform(30.0, 400.0);
        cam.cx = rng.uniform(10.0, 200.0);
        cam.cy = rng.uniform(10.0, 200.0);
        const int i = rng.uniform_int(0, 300), j = rng.uniform_int(0, 200);
        const double d = rng.uniform(0.05, 10.0);

        Observation obs;
        obs.width = 301;
        obs.height = 201;
        obs.depth.assign(301 * 201, 0.0f);
        obs.class_ids.assign(301 * 201, kClassNone);
        obs.depth[std::size_t(j) * 301 + i] = static_cast<float>(d);

        const auto pts = backproject(obs, cam);
        const Vec3 o = oracle::oracle_backproject_pixel(
            i, j, obs.depth[std::size_t(j) * 301 + i], cam);
        worst = std::max({worst, std::abs(pts[0].p.x - o.x),
                          std::abs(pts[0].p.y - o.y), std::abs(pts[0].p.z - o.z)});
    }

    // Camera-to-world against the homogeneous 4x4 oracle.
    for (int k = 0; k < 1000; ++k) {
        CameraConfig cam;
        cam.mount_height = rng.uniform(0.2, 1.5);
        cam.pitch = rng.uniform(-0.8, 0.3);
        const Pose pose = Pose::make(rng.uniform(-10.0, 10.0),
                                     rng.uniform(-10.0, 10.0),
                                     rng.uniform(-3.14159, 3.14159));
        const CameraPoint cp{0, 0,
                             {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                              rng.uniform(0.05, 8.0)}};
        const auto w = to_world(std::vector<CameraPoint>{cp}, pose, cam);
        const Vec3 o = oracle::oracle_to_world_point(cp.p, pose, cam);
        worst = std::max({worst, std::abs(w[0].p.x - o.x),
                          std::abs(w[0].p.y - o.y), std::abs(w[0].p.z - o.z)});
    }

    // Map projection against the direct formula.
    bool cells_ok = true;
    for (int k = 0; k < 1000; ++k) {
        MapConfig cfg;
        cfg.cells_h = rng.uniform_int(10, 500);
        cfg.cells_w = rng.uniform_int(10, 500);
        cfg.resolution = rng.uniform(0.01, 0.2);
        const Vec2 origin{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        VLMap map(cfg, 1, origin);
        const Vec2 w{rng.uniform(-10.0, 30.0), rng.uniform(-10.0, 30.0)};

        const long long u = static_cast<long long>(
            std::floor((w.y - origin.y) / cfg.resolution));
        const long long v = static_cast<long long>(
            std::floor((w.x - origin.x) / cfg.resolution));
        const bool in = u >= 0 && u < cfg.cells_h && v >= 0 && v < cfg.cells_w;
        const auto cell = map.world_to_map(w);
        if (in != cell.has_value()) cells_ok = false;
        if (cell && (cell->u != u || cell->v != v)) cells_ok = false;
    }

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    report(1, "geometry oracle suite",
           worst < 1e-9 && cells_ok && secs < 5.0,
           fmt("max diff %.2e, cells %s, %.2f s", worst,
               cells_ok ? "exact" : "MISMATCH", secs));
}

// ---------------------------------------------------------------- criterion 2
void criterion_fusion() {
    Rng rng(202);
    const int dim = 16;
    double worst = 0.0;
    bool counts_ok = true;
    MapConfig cfg;
    cfg.cells_h = cfg.cells_w = 32;

    for (int set = 0; set < 100; ++set) {
        const int n = rng.uniform_int(2, 60);
        std::vector<std::vector<double>> samples;
        for (int k = 0; k < n; ++k) {
            std::vector<double> v(dim);
            double n2 = 0.0;
            for (double& x : v) {
                x = rng.gaussian();
                n2 += x * x;
            }
            for (double& x : v) x /= std::sqrt(n2);
            samples.push_back(std::move(v));
        }
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int k = n; k > 1; --k) {
            std::swap(perm[k - 1], perm[rng.uniform_int(0, k - 1)]);
        }

        VLMap a(cfg, dim), b(cfg, dim);
        const Vec3 p{0.8, 0.8, 0.5};
        auto frame = [&](const std::vector<double>& f) {
            PointCloudFrame fr;
            fr.dim = dim;
            fr.points = {p};
            fr.features = f;
            return fr;
        };
        for (int k = 0; k < n; ++k) a.update(frame(samples[k]), std::nullopt);
        for (int k = 0; k < n; ++k) {
            b.update(frame(samples[perm[k]]), std::nullopt);
        }

        const Cell c = *a.world_to_map({p.x, p.y});
        counts_ok = counts_ok && a.count_at(c) == static_cast<unsigned>(n) &&
                    b.count_at(c) == static_cast<unsigned>(n);
        const auto ma = a.feature_mean(c), mb = b.feature_mean(c);
        for (int d = 0; d < dim; ++d) {
            worst = std::max(worst, std::abs(ma[d] - mb[d]));
        }
    }
    report(2, "fusion permutation suite", worst < 1e-12 && counts_ok,
           fmt("max diff %.2e, counts %s", worst,
               counts_ok ? "exact" : "WRONG"));
}

// ---------------------------------------------------------------- criterion 3
void criterion_segmentation() {
    const Scene scene = load_scene(data_path("lab.scene"));
    RunConfig cfg;

    std::vector<std::string> classes = scene.class_table;
    std::vector<std::string> cb_classes = classes;
    cb_classes.insert(cb_classes.end(), {"floor", "wall"});
    const Codebook codebook =
        Codebook::build(cb_classes, cfg.feature_dim, cfg.codebook_seed);

    const Pose start{2.0, 3.0, 0.0};
    const Vec2 origin{start.x - (cfg.map.cells_w / 2 + 0.5) * cfg.map.resolution,
                      start.y - (cfg.map.cells_h / 2 + 0.5) * cfg.map.resolution};
    VLMap map(cfg.map, cfg.feature_dim, origin);

    // Mapping sweep: full turn at the start, a short straight run, another
    // full turn.
    Pose pose = start;
    int t = 0;
    auto observe = [&]() {
        const Observation obs = render(scene, pose, cfg.camera);
        const FeatureImage feats =
            encode_pixels(obs, scene.class_table, codebook, 0.0, t++);
        map.update(attach_features(
                       to_world(backproject(obs, cfg.camera), pose, cfg.camera),
                       feats),
                   pose.position());
    };
    for (int k = 0; k < 24; ++k) {
        observe();
        pose = step_agent(scene, pose, Action::kTurnLeft, cfg.motion).pose;
    }
    for (int k = 0; k < 5; ++k) {
        observe();
        pose = step_agent(scene, pose, Action::kMoveForward, cfg.motion).pose;
    }
    for (int k = 0; k < 24; ++k) {
        observe();
        pose = step_agent(scene, pose, Action::kTurnLeft, cfg.motion).pose;
    }

    // Label with the full class vocabulary.
    std::vector<std::string> defaults(classes.begin() + 1, classes.end());
    defaults.insert(defaults.end(), {"floor", "wall"});
    const CodebookEncoder encoder(codebook, scene.class_table);
    const LabelGrid grid = label_map(map, classes[0], defaults, encoder);

    // Footprint rasterization oracle: cell rectangle vs object footprints.
    int checked = 0, correct = 0;
    for (int u = 0; u < map.rows(); ++u) {
        for (int v = 0; v < map.cols(); ++v) {
            const Cell c{u, v};
            if (map.occ_at(c) != Occupancy::kOccupied) continue;
            const Vec2 lo{origin.x + v * cfg.map.resolution,
                          origin.y + u * cfg.map.resolution};
            const Vec2 hi{lo.x + cfg.map.resolution, lo.y + cfg.map.resolution};
            int covering = -1, n_cover = 0;
            for (std::size_t o = 0; o < scene.objects.size(); ++o) {
                const Box3& b = scene.objects[o].box;
                if (lo.x < b.max.x && hi.x > b.min.x && lo.y < b.max.y &&
                    hi.y > b.min.y) {
                    covering = static_cast<int>(o);
                    ++n_cover;
                }
            }
            if (n_cover != 1) continue;
            ++checked;
            const std::int16_t lbl = grid.label_at(c);
            const std::string want = scene.objects[covering].class_name;
            std::string got = "?";
            if (lbl == 0) {
                got = classes[0];
            } else if (lbl > 0 && lbl <= static_cast<int>(defaults.size())) {
                got = defaults[lbl - 1];
            }
            correct += got == want;
        }
    }
    report(3, "segmentation identity",
           checked >= 50 && correct == checked,
           fmt("%d/%d singly-covered occupied cells correct", correct, checked));
}

// ---------------------------------------------------------------- criterion 4
void criterion_dbscan() {
    Rng rng(404);
    int agreed = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<Cell> cells;
        std::set<std::pair<int, int>> seen;
        auto add = [&](Cell c) {
            if (seen.insert({c.u, c.v}).second) cells.push_back(c);
        };
        const int blobs = rng.uniform_int(0, 5);
        for (int b = 0; b < blobs; ++b) {
            const int cu = rng.uniform_int(10, 190), cv = rng.uniform_int(10, 190);
            const int m = rng.uniform_int(4, 90);
            for (int k = 0; k < m; ++k) {
                add({cu + rng.uniform_int(-5, 5), cv + rng.uniform_int(-5, 5)});
            }
        }
        const int scattered = rng.uniform_int(0, 80);
        for (int k = 0; k < scattered; ++k) {
            add({rng.uniform_int(0, 199), rng.uniform_int(0, 199)});
        }
        while (cells.size() > 500) cells.pop_back();

        const double eps = rng.uniform(1.0, 5.0);
        const int min_pts = rng.uniform_int(1, 8);
        const auto clusters = dbscan(cells, eps, min_pts);
        const auto labels = oracle::oracle_dbscan_labels(cells, eps, min_pts);

        std::vector<Cell> sorted = cells;
        std::sort(sorted.begin(), sorted.end(), [](const Cell& a, const Cell& b) {
            return a.u != b.u ? a.u < b.u : a.v < b.v;
        });
        std::map<int, std::set<std::pair<int, int>>> want;
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            if (labels[k] >= 0) {
                want[labels[k]].insert({sorted[k].u, sorted[k].v});
            }
        }
        std::set<std::set<std::pair<int, int>>> got_sets, want_sets;
        for (const auto& c : clusters) {
            std::set<std::pair<int, int>> s;
            for (const Cell& m : c.members) s.insert({m.u, m.v});
            got_sets.insert(std::move(s));
        }
        for (auto& [id, s] : want) want_sets.insert(s);
        agreed += got_sets == want_sets;
    }
    report(4, "dbscan oracle equivalence", agreed == trials,
           fmt("%d/%d random instances identical", agreed, trials));
}

// ---------------------------------------------------------------- criterion 5
void criterion_pure_motion() {
    const Scene scene = load_scene(data_path("open.scene"));
    double worst_default = 0.0, worst_tight = 0.0;
    bool all_completed = true;
    for (double dist : {0.5, 1.0, 2.0}) {
        for (int run = 0; run < 5; ++run) {
            Rng rng(mix_seed(900 + run, static_cast<std::uint64_t>(dist * 1000)));
            const Pose start = Pose::make(
                4.0 + rng.uniform(-0.25, 0.25), 6.0 + rng.uniform(-0.25, 0.25),
                rng.uniform(-deg2rad(30.0), deg2rad(30.0)));
            for (int variant = 0; variant < 2; ++variant) {
                EpisodeSpec spec;
                spec.scene = &scene;
                spec.program = {{MacroName::kMoveForward, dist, {}, "", ""}};
                spec.start = start;
                spec.seed = 1000 + run;
                if (variant == 1) spec.config.controller.success_radius = 0.05;
                const EpisodeResult r = run_episode(spec);
                all_completed = all_completed && r.completed;
                const Vec2 goal{start.x + dist * std::cos(start.theta),
                                start.y + dist * std::sin(start.theta)};
                const double err = (r.final_pose.position() - goal).norm();
                double& worst = variant == 0 ? worst_default : worst_tight;
                worst = std::max(worst, err);
            }
        }
    }
    report(5, "pure-motion analog",
           all_completed && worst_default <= 0.325 && worst_tight <= 0.125,
           fmt("worst err %.3f m (sr 0.2), %.3f m (sr 0.05)", worst_default,
               worst_tight));
}

// ---------------------------------------------------------------- criterion 6
void criterion_landmark_motion() {
    const Scene scene = load_scene(data_path("lab.scene"));
    const Grammar grammar = Grammar::load(data_path("grammar.vg"));
    const auto corpus = load_episode_corpus(data_path("episodes_lab.jsonl"));

    RunConfig cfg;
    const BatchResult clean = run_batch(corpus, scene, grammar, 5, 11, cfg);
    cfg.noise_sigma = 0.1;
    const BatchResult noisy = run_batch(corpus, scene, grammar, 5, 11, cfg);

    const bool pass = clean.overall.episodes == 20 &&
                      clean.overall.sr_pct == 100.0 &&
                      clean.overall.mean_dist <= 0.3 &&
                      noisy.overall.sr_pct >= 90.0;
    report(6, "landmark-motion analog", pass,
           fmt("noise 0: SR %.0f%% (%d/20) dist %.3f m; noise 0.1: SR %.0f%%",
               clean.overall.sr_pct, clean.overall.successes,
               clean.overall.mean_dist, noisy.overall.sr_pct));
}

// ---------------------------------------------------------------- criterion 7
void criterion_complex_instruction() {
    const Scene scene = load_scene(data_path("lab.scene"));
    const Grammar grammar = Grammar::load(data_path("grammar.vg"));
    const auto corpus = load_episode_corpus(data_path("episodes_complex.jsonl"));
    const BatchResult batch =
        run_batch(corpus, scene, grammar, 5, 11, RunConfig{});
    const bool pass = batch.overall.episodes == 5 &&
                      batch.overall.sr_pct == 100.0 &&
                      batch.overall.mean_steps < 200.0 &&
                      batch.overall.mean_dist <= 0.3;
    report(7, "complex-instruction analog", pass,
           fmt("SR %.0f%%, dist %.3f m, %.1f steps", batch.overall.sr_pct,
               batch.overall.mean_dist, batch.overall.mean_steps));
}

// ---------------------------------------------------------------- criterion 8
void criterion_parser_corpus() {
    const Grammar grammar = Grammar::load(data_path("grammar.vg"));
    std::ifstream in(data_path("instructions.jsonl"));
    int positives = 0, negatives = 0, failed = 0;
    std::set<std::string> corpus_instructions;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto rec = nlohmann::json::parse(line);
        const std::string instruction = rec["instruction"];
        corpus_instructions.insert(instruction);
        if (rec.contains("error")) {
            try {
                grammar.parse_instruction(instruction);
                ++failed;
            } catch (const UnparsableClause&) {
                ++negatives;
            }
            continue;
        }
        try {
            const MacroProgram got = grammar.parse_instruction(instruction);
            const MacroProgram want = program_from_json(rec["expected"]);
            bool same = got.size() == want.size();
            for (std::size_t k = 0; same && k < got.size(); ++k) {
                auto close = [](const std::optional<double>& a,
                                const std::optional<double>& b) {
                    if (a.has_value() != b.has_value()) return false;
                    return !a || std::abs(*a - *b) < 1e-9;
                };
                same = got[k].name == want[k].name &&
                       close(got[k].dist, want[k].dist) &&
                       close(got[k].angle, want[k].angle) &&
                       got[k].landmark == want[k].landmark &&
                       got[k].landmark2 == want[k].landmark2;
            }
            if (same) ++positives;
            else ++failed;
        } catch (const std::exception&) {
            ++failed;
        }
    }

    // Every instruction string the evaluation quotes must be in the corpus.
    const std::vector<std::string> quoted = {
        "Go forward by 1.0 meter.",
        "Navigate ahead by 1.0 meter.",
        "Walk forward by 2 meters.",
        "Navigate to the left side of the chair",
        "Navigate to the right side of the chair",
        "Navigate to the front of the chair",
        "Move in between the box and the chair",
        "Move to the left side of the chair. Then, turn left by 90 degrees.",
        "Walk straight passing the gray couch",
        "Exit the bedroom and turn left. Walk straight passing the gray couch "
        "and stop near the rug.",
        "Go to the left side of the green chair. Then, navigate to the right "
        "of the red chair ahead. Turn right by 45 degrees and then navigate "
        "in between the box and the counter.",
    };
    int quoted_present = 0;
    for (const std::string& q : quoted) {
        quoted_present += corpus_instructions.count(q) > 0;
    }

    const bool pass = failed == 0 && positives >= 25 && negatives == 5 &&
                      quoted_present == static_cast<int>(quoted.size());
    report(8, "parser golden corpus", pass,
           fmt("%d exact, %d/5 negatives, %d/%zu paper strings, %d failures",
               positives, negatives, quoted_present, quoted.size(), failed));
}

// ---------------------------------------------------------------- criterion 9
void criterion_planner_optimality() {
    Rng rng(909);
    int agreed = 0, compared = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        OccGrid occ(60, 60);
        for (auto& c : occ.cells) {
            const double r = rng.uniform();
            c = r < 0.20   ? Occupancy::kOccupied
                : r < 0.55 ? Occupancy::kUnknown
                           : Occupancy::kFree;
        }
        const int inflation = rng.uniform_int(0, 2);
        auto pick = [&]() {
            while (true) {
                const Cell c{rng.uniform_int(0, 59), rng.uniform_int(0, 59)};
                if (occ.at(c) != Occupancy::kOccupied) return c;
            }
        };
        const Cell start = pick(), goal = pick();
        const double want =
            oracle::oracle_dijkstra_cost(start, goal, occ, inflation, 1.5);
        try {
            const PathResult got = plan_path(start, goal, occ, inflation, 1.5);
            agreed += std::isfinite(want) && got.cost == want;
            ++compared;
        } catch (const NoPath&) {
            agreed += !std::isfinite(want);
        }
    }
    report(9, "path-planner optimality", agreed == trials,
           fmt("%d/%d grids exact (%d with paths)", agreed, trials, compared));
}

// --------------------------------------------------------------- criterion 10
void criterion_determinism() {
    const Scene scene = load_scene(data_path("lab.scene"));
    const Grammar grammar = Grammar::load(data_path("grammar.vg"));
    const auto corpus = load_episode_corpus(data_path("episodes_lab.jsonl"));
    RunConfig cfg;
    cfg.noise_sigma = 0.05;

    const std::string out_a = "acceptance_results_a.json";
    const std::string out_b = "acceptance_results_b.json";
    const BatchResult a = run_batch(corpus, scene, grammar, 2, 77, cfg);
    write_results_file(a, "lab.scene", 2, 77, out_a);
    const BatchResult b = run_batch(corpus, scene, grammar, 2, 77, cfg);
    write_results_file(b, "lab.scene", 2, 77, out_b);

    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string bytes_a = slurp(out_a), bytes_b = slurp(out_b);
    const bool pass = !bytes_a.empty() && bytes_a == bytes_b;
    report(10, "batch determinism", pass,
           fmt("%zu bytes, %s", bytes_a.size(),
               pass ? "byte-identical" : "DIFFER"));
    std::filesystem::remove(out_a);
    std::filesystem::remove(out_b);
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_geometry();
    criterion_fusion();
    criterion_segmentation();
    criterion_dbscan();
    criterion_pure_motion();
    criterion_landmark_motion();
    criterion_complex_instruction();
    criterion_parser_corpus();
    criterion_planner_optimality();
    criterion_determinism();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("%d/10 criteria passed in %.1f s\n", 10 - failures, secs);
    return failures;
}
