// posebench: dataset generation, training, pose estimation, visualization and
// ablation for the synthetic correspondence-distribution pipeline.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "corrpose/bench/evaluate.hpp"
#include "corrpose/bench/visualize.hpp"
#include "corrpose/config.hpp"
#include "corrpose/io/image_io.hpp"
#include "corrpose/parallel.hpp"
#include "corrpose/synth/dataset.hpp"

namespace fs = std::filesystem;
using namespace corrpose;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::int64_t seed = -1;
    int threads = 0;
    bool oracle = false;
    bool depth = false;
};

Config load_config(const CliOptions& cli) {
    Config cfg;
    if (!cli.config_path.empty()) cfg = Config::from_file(cli.config_path);
    for (const auto& kv : cli.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) raise(ErrorCode::InvalidConfig, "--set expects key=value: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (cli.seed >= 0) cfg.set("seed", std::to_string(cli.seed));
    if (cli.oracle) cfg.set("oracle", "true");
    if (cli.depth) cfg.set("depth", "true");
    return cfg;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::string& config_hash, const std::string& header)
        : out_(path) {
        if (!out_) raise(ErrorCode::IoError, "cannot write " + path.string());
        out_ << "# config_hash=" << config_hash << "\n" << header << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

    void comment(const std::string& line) { out_ << "# " << line << "\n"; }

private:
    std::ofstream out_;
};

ObjectSpec spec_for(const std::string& name, std::uint64_t seed) {
    ObjectSpec spec = ObjectSpec::preset(shape_kind_from_name(name));
    spec.shape_seed = mix_seed(seed, 0x73686170ULL);
    return spec;
}

/// Object reloaded from a generated dataset directory: stored mesh and
/// surface, symmetry/texture resolved from the shape name.
SyntheticObject load_object(const fs::path& dataset, const std::string& name) {
    const fs::path dir = dataset / name;
    if (!fs::exists(dir / "surface.sset")) {
        raise(ErrorCode::InvalidConfig, "no dataset for object '" + name + "' under " + dataset.string());
    }
    SyntheticObject obj;
    obj.spec = ObjectSpec::preset(shape_kind_from_name(name));
    obj.mesh = load_obj_file((dir / "mesh.obj").string());
    obj.surface = load_surface_samples((dir / "surface.sset").string());
    switch (obj.spec.kind) {
        case ShapeKind::Cylinder: obj.symmetry = SymmetryGroup::continuous_z(36, true); break;
        case ShapeKind::Cube: obj.symmetry = SymmetryGroup::discrete_z(4); break;
        case ShapeKind::Sphere: obj.symmetry = SymmetryGroup::sphere(); break;
        case ShapeKind::Blob: obj.symmetry = SymmetryGroup::identity_only(); break;
    }
    obj.texture = [](const Vec3&) { return 0.5; };  // features already rendered
    return obj;
}

struct LoadedSplit {
    std::vector<SceneRecord> records;
    std::vector<RenderedCrop> crops;
};

LoadedSplit load_split(const fs::path& dataset, const std::string& object, const std::string& split,
                       std::size_t limit = 0) {
    LoadedSplit out;
    out.records = load_scene_records((dataset / object / (split + "_gt.jsonl")).string());
    if (limit > 0 && out.records.size() > limit) out.records.resize(limit);
    out.crops.reserve(out.records.size());
    for (const auto& rec : out.records) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05d.rcrp", rec.scene_id);
        out.crops.push_back(load_crop((dataset / object / split / name).string()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const CliOptions& cli) {
    const Config cfg = load_config(cli);
    cfg.reject_unknown({"objects", "train_scenes", "test_scenes", "crop_size", "focal",
                        "surface_samples", "seed", "oracle", "depth"});
    const auto objects = cfg.get_list("objects", {"cylinder", "blob"});
    const int train_scenes = static_cast<int>(cfg.get_int("train_scenes", 2000));
    const int test_scenes = static_cast<int>(cfg.get_int("test_scenes", 200));
    const int crop_size = static_cast<int>(cfg.get_int("crop_size", 112));
    const double focal = cfg.get_double("focal", 1.25 * crop_size);
    const int surface_samples = static_cast<int>(cfg.get_int("surface_samples", 4096));
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

    const Camera camera(focal, focal, crop_size / 2.0, crop_size / 2.0, crop_size, crop_size);
    const fs::path out_dir(cli.out_dir);
    fs::create_directories(out_dir);
    std::map<std::string, std::string> hashes;

    for (const auto& name : objects) {
        const auto object = make_object(spec_for(name, seed), surface_samples, mix_seed(seed, 1));
        const fs::path dir = out_dir / name;
        fs::create_directories(dir / "train");
        fs::create_directories(dir / "test");
        save_obj_file(object.mesh, (dir / "mesh.obj").string());
        save_surface_samples(object.surface, (dir / "surface.sset").string());
        hashes[name + "/mesh.obj"] = hash_file((dir / "mesh.obj").string());
        hashes[name + "/surface.sset"] = hash_file((dir / "surface.sset").string());

        const std::uint64_t object_seed = mix_seed(seed, std::hash<std::string>{}(name));
        for (const std::string split : {"train", "test"}) {
            const int count = split == "train" ? train_scenes : test_scenes;
            const std::uint64_t split_seed =
                mix_seed(object_seed, split == "train" ? 0x7472ULL : 0x7465ULL);
            std::vector<SceneRecord> records(static_cast<std::size_t>(count));
            std::vector<std::string> crop_hashes(static_cast<std::size_t>(count));
            parallel_for(static_cast<std::size_t>(count), cli.threads, [&](std::size_t i) {
                const auto gen = generate_scene(object, camera, split_seed, i);
                char file[32];
                std::snprintf(file, sizeof(file), "%05zu.rcrp", i);
                const fs::path crop_path = dir / split / file;
                save_crop(gen.crop, crop_path.string());
                crop_hashes[i] = hash_file(crop_path.string());
                SceneRecord rec;
                rec.scene_id = static_cast<int>(i);
                rec.object_name = name;
                rec.seed = gen.scene.seed;
                rec.pose = gen.scene.object_pose;
                rec.camera = camera;
                rec.diameter = object.diameter();
                records[i] = rec;
            });
            save_scene_records(records, (dir / (split + "_gt.jsonl")).string());
            hashes[name + "/" + split + "_gt.jsonl"] =
                hash_file((dir / (split + "_gt.jsonl")).string());
            for (int i = 0; i < count; ++i) {
                char file[32];
                std::snprintf(file, sizeof(file), "%05d.rcrp", i);
                hashes[name + "/" + split + "/" + file] = crop_hashes[static_cast<std::size_t>(i)];
            }
            std::cout << name << ": " << count << " " << split << " scenes\n";
        }
    }
    write_manifest(hashes, (out_dir / "manifest.json").string());
    return 0;
}

// ---------------------------------------------------------------------------
// train

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig tc;
    tc.embed_dim = static_cast<int>(cfg.get_int("embed_dim", 12));
    tc.pairs_per_crop = static_cast<int>(cfg.get_int("pairs_per_crop", 256));
    tc.negatives_per_crop = static_cast<int>(cfg.get_int("negatives_per_crop", 256));
    tc.mask_pixels_per_crop = static_cast<int>(cfg.get_int("mask_pixels_per_crop", 256));
    tc.batch_size = static_cast<int>(cfg.get_int("batch_size", 8));
    tc.lr_query = cfg.get_double("lr_query", 3e-4);
    tc.lr_key = cfg.get_double("lr_key", 3e-5);
    tc.warmup_steps = cfg.get_int("warmup_steps", 2000);
    tc.epochs = static_cast<int>(cfg.get_int("epochs", 10));
    tc.rng_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    tc.feature_noise_sigma = cfg.get_double("feature_noise_sigma", 0.05);
    tc.feature_noise_prob = cfg.get_double("feature_noise_prob", 0.5);
    return tc;
}

int cmd_train(const CliOptions& cli) {
    const Config cfg = load_config(cli);
    cfg.reject_unknown({"dataset", "object", "embed_dim", "pairs_per_crop", "negatives_per_crop",
                        "mask_pixels_per_crop", "batch_size", "lr_query", "lr_key", "warmup_steps",
                        "epochs", "seed", "max_scenes", "feature_noise_sigma", "feature_noise_prob",
                        "oracle", "depth"});
    const fs::path dataset(cfg.get_string("dataset", "out"));
    const std::string object_name = cfg.get_string("object", "blob");
    const auto object = load_object(dataset, object_name);
    const auto split = load_split(dataset, object_name, "train",
                                  static_cast<std::size_t>(cfg.get_int("max_scenes", 0)));
    if (split.crops.empty()) raise(ErrorCode::InvalidConfig, "training split is empty");

    const TrainConfig tc = train_config_from(cfg);
    Trainer trainer(split.crops, object.surface, tc);
    const auto t0 = std::chrono::steady_clock::now();
    std::int64_t done = 0;
    const std::int64_t total = trainer.total_steps();
    while (trainer.step()) {
        if (++done % 200 == 0 || done == total) {
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cout << "step " << done << "/" << total << "  L_E " << fmt(trainer.trace.back().loss_embed)
                      << "  L_M " << fmt(trainer.trace.back().loss_mask) << "  (" << fmt(dt) << "s)\n";
        }
    }

    const fs::path out_dir(cli.out_dir);
    fs::create_directories(out_dir);
    save_siren(trainer.key_model, (out_dir / "key.smlp").string());
    save_siren(trainer.query_model, (out_dir / "query.smlp").string());
    CsvWriter loss_csv(out_dir / "loss.csv", cfg.hash_hex(), "step,loss_embed,loss_mask,effective_lr");
    for (const auto& row : trainer.trace) {
        loss_csv.row({std::to_string(row.step), fmt(row.loss_embed), fmt(row.loss_mask),
                      fmt(row.effective_lr)});
    }
    std::cout << "models written to " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// estimate

EstimateConfig estimate_config_from(const Config& cfg) {
    EstimateConfig ec;
    ec.downscale = static_cast<int>(cfg.get_int("downscale", 3));
    ec.ransac.iterations = static_cast<int>(cfg.get_int("iterations", 2000));
    ec.ransac.gamma = cfg.get_double("gamma", 1.5);
    ec.ransac.retain = static_cast<int>(cfg.get_int("retain", 8));
    ec.ransac.rng_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    ec.ransac.min_score_floor = std::log(cfg.get_double("min_prob_floor", 1e-12));
    ec.refine_enabled = cfg.get_bool("refine", true);
    ec.depth_enabled = cfg.get_bool("depth", false);
    ec.oracle_mode = cfg.get_bool("oracle", false);
    ec.oracle_sigma_mult = cfg.get_double("oracle_sigma_mult", 0.5);
    ec.table_budget_bytes = static_cast<std::size_t>(cfg.get_int("table_budget_mb", 2048)) << 20;
    return ec;
}

void write_estimate_outputs(const EvalReport& report, const std::string& object_name,
                            const Config& cfg, const fs::path& out_dir, bool emit_timings) {
    CsvWriter poses(out_dir / "poses.csv", cfg.hash_hex(),
                    "scene_id,object_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,t0,t1,t2,score,s_M,s_C,"
                    "refine_iterations,runtime_ms");
    CsvWriter rep(out_dir / "report.csv", cfg.hash_hex(),
                  "scene_id,success,mssd,rotation_error_deg,translation_error,score,runtime_ms,error");
    std::ofstream timings(out_dir / "timings.log");
    for (const auto& row : report.rows) {
        const double reported_ms = emit_timings ? row.runtime_ms : 0.0;
        std::vector<std::string> cells = {std::to_string(row.scene_id), object_name};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) cells.push_back(fmt(row.pose.rotation(i, j)));
        }
        for (int i = 0; i < 3; ++i) cells.push_back(fmt(row.pose.translation[i]));
        cells.push_back(fmt(row.score));
        cells.push_back(fmt(row.mask_score));
        cells.push_back(fmt(row.corr_score));
        cells.push_back(std::to_string(row.refine_iterations));
        cells.push_back(fmt(reported_ms));
        poses.row(cells);

        rep.row({std::to_string(row.scene_id), row.success ? "1" : "0", fmt(row.mssd),
                 fmt(row.rotation_error * 180.0 / M_PI), fmt(row.translation_error), fmt(row.score),
                 fmt(reported_ms), row.error});
        timings << row.scene_id << " " << fmt(row.runtime_ms) << "\n";
    }
    rep.comment("diameter=" + fmt(report.diameter));
    for (double thr : report.thresholds) {
        rep.comment("recall@" + fmt(100.0 * thr) + "%=" + fmt(report.recall_at(thr)));
    }
}

int cmd_estimate(const CliOptions& cli) {
    const Config cfg = load_config(cli);
    cfg.reject_unknown({"dataset", "object", "key_model", "query_model", "iterations", "gamma",
                        "retain", "downscale", "seed", "min_prob_floor", "table_budget_mb",
                        "refine", "depth", "oracle", "oracle_sigma_mult", "emit_timings",
                        "max_scenes"});
    const fs::path dataset(cfg.get_string("dataset", "out"));
    const std::string object_name = cfg.get_string("object", "blob");
    const auto object = load_object(dataset, object_name);
    const auto split = load_split(dataset, object_name, "test",
                                  static_cast<std::size_t>(cfg.get_int("max_scenes", 0)));
    const EstimateConfig ec = estimate_config_from(cfg);

    ModelBundle models;
    const ModelBundle* model_ptr = nullptr;
    if (!ec.oracle_mode) {
        models.key_model = load_siren(cfg.get_string("key_model", "key.smlp"));
        models.query_model = load_siren(cfg.get_string("query_model", "query.smlp"));
        model_ptr = &models;
    }

    std::vector<const RenderedCrop*> crops;
    crops.reserve(split.crops.size());
    for (const auto& crop : split.crops) crops.push_back(&crop);
    const EvalReport report =
        evaluate_scenes(object, split.records, crops, model_ptr, ec, cli.threads);

    const fs::path out_dir(cli.out_dir);
    fs::create_directories(out_dir);
    write_estimate_outputs(report, object_name, cfg, out_dir, cfg.get_bool("emit_timings", false));
    for (double thr : report.thresholds) {
        std::cout << "recall@" << 100.0 * thr << "% = " << fmt(report.recall_at(thr)) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// visualize

int cmd_visualize(const CliOptions& cli) {
    const Config cfg = load_config(cli);
    cfg.reject_unknown({"dataset", "object", "key_model", "query_model", "scene", "downscale",
                        "seed", "oracle", "depth"});
    const fs::path dataset(cfg.get_string("dataset", "out"));
    const std::string object_name = cfg.get_string("object", "blob");
    const auto object = load_object(dataset, object_name);
    const auto split = load_split(dataset, object_name, "test");
    const std::size_t scene_idx = static_cast<std::size_t>(cfg.get_int("scene", 0));
    if (scene_idx >= split.records.size()) raise(ErrorCode::InvalidConfig, "scene index out of range");
    const int downscale = static_cast<int>(cfg.get_int("downscale", 3));

    ModelBundle models;
    models.key_model = load_siren(cfg.get_string("key_model", "key.smlp"));
    models.query_model = load_siren(cfg.get_string("query_model", "query.smlp"));
    const CoordNormalizer normalizer = CoordNormalizer::from_surface(object.surface);

    const auto& record = split.records[scene_idx];
    const auto& crop = split.crops[scene_idx];
    const QueryImage qi = build_query_image(models.query_model, crop.feature_image, downscale);
    const MatX keys = siren_forward(models.key_model, normalizer.normalize(object.surface.points));
    const Camera query_camera = record.camera.downscaled(downscale);
    const CorrespondenceTable table = build_table(qi, keys);

    const fs::path out_dir(cli.out_dir);
    fs::create_directories(out_dir);
    write_ppm(visualize_embedding_image(qi.queries, qi.height, qi.width),
              (out_dir / "query_rgb.ppm").string());
    write_ppm(visualize_keys(keys, record.pose, query_camera, object.surface),
              (out_dir / "keys_rgb.ppm").string());
    write_pgm(visualize_entropy(table), (out_dir / "entropy.pgm").string());
    std::cout << "visualizations written to " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ablate

int cmd_ablate(const CliOptions& cli) {
    const Config cfg = load_config(cli);
    cfg.reject_unknown({"dataset", "object", "embed_dims", "gammas", "epochs", "iterations",
                        "seed", "batch_size", "pairs_per_crop", "negatives_per_crop",
                        "warmup_steps", "downscale", "max_scenes", "test_max_scenes", "oracle",
                        "depth"});
    const fs::path dataset(cfg.get_string("dataset", "out"));
    const std::string object_name = cfg.get_string("object", "blob");
    const auto object = load_object(dataset, object_name);
    const auto train_split = load_split(dataset, object_name, "train",
                                        static_cast<std::size_t>(cfg.get_int("max_scenes", 0)));
    const auto test_split = load_split(dataset, object_name, "test",
                                       static_cast<std::size_t>(cfg.get_int("test_max_scenes", 0)));
    std::vector<const RenderedCrop*> test_crops;
    for (const auto& crop : test_split.crops) test_crops.push_back(&crop);

    const auto embed_dims = cfg.get_list("embed_dims", {"6", "12"});
    const auto gammas = cfg.get_list("gammas", {"1", "1.5"});

    const fs::path out_dir(cli.out_dir);
    fs::create_directories(out_dir);
    CsvWriter csv(out_dir / "ablation.csv", cfg.hash_hex(),
                  "embed_dim,refine,gamma,recall_2,recall_5,recall_10,mean_translation_error");

    for (const auto& e_str : embed_dims) {
        TrainConfig tc = train_config_from(cfg);
        tc.embed_dim = std::stoi(e_str);
        Trainer trainer(train_split.crops, object.surface, tc);
        trainer.run();
        ModelBundle models{std::move(trainer.key_model), std::move(trainer.query_model)};

        for (const bool refine_on : {false, true}) {
            for (const auto& g_str : gammas) {
                EstimateConfig ec = estimate_config_from(cfg);
                ec.refine_enabled = refine_on;
                ec.ransac.gamma = std::stod(g_str);
                const EvalReport report = evaluate_scenes(object, test_split.records, test_crops,
                                                          &models, ec, cli.threads);
                csv.row({e_str, refine_on ? "1" : "0", g_str, fmt(report.recall_at(0.02)),
                         fmt(report.recall_at(0.05)), fmt(report.recall_at(0.10)),
                         fmt(report.mean_translation_error())});
                std::cout << "E=" << e_str << " refine=" << refine_on << " gamma=" << g_str
                          << " recall@5%=" << fmt(report.recall_at(0.05)) << "\n";
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic correspondence-distribution pose benchmark"};
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions cli;
    app.add_option("--config", cli.config_path, "flat key=value config file");
    app.add_option("--out", cli.out_dir, "output directory");
    app.add_option("--seed", cli.seed, "seed override");
    app.add_option("--threads", cli.threads, "worker threads (0 = hardware)");
    app.add_flag("--oracle", cli.oracle, "use ground-truth-derived tables");
    app.add_flag("--depth", cli.depth, "use depth images for adjustment");
    app.add_option("--set", cli.overrides, "config override key=value")->type_size(1);

    auto* generate = app.add_subcommand("generate", "render a synthetic dataset");
    auto* train = app.add_subcommand("train", "train key/query models");
    auto* estimate = app.add_subcommand("estimate", "estimate poses on the test split");
    auto* visualize = app.add_subcommand("visualize", "embedding and entropy images");
    auto* ablate = app.add_subcommand("ablate", "hyperparameter grid evaluation");

    CLI11_PARSE(app, argc, argv);
    try {
        if (generate->parsed()) return cmd_generate(cli);
        if (train->parsed()) return cmd_train(cli);
        if (estimate->parsed()) return cmd_estimate(cli);
        if (visualize->parsed()) return cmd_visualize(cli);
        if (ablate->parsed()) return cmd_ablate(cli);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::IoError ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
