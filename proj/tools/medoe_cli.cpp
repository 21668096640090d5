// medoe: long-tailed segmentation experiment driver.
//
// Subcommands: gen, freq, train, train-moe, eval, bias, diag, report.
// Exit codes: 0 success, 1 validation error, 2 numeric divergence, 3 I/O.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "medoe/io.hpp"
#include "medoe/losses.hpp"
#include "medoe/pipeline.hpp"
#include "medoe/synthgen.hpp"
#include "medoe/training.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace medoe;

namespace {

// ---------------------------------------------------------------- config ---

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        // generator
        "H", "W", "c", "n_head", "n_body", "n_tail", "D", "gamma", "sigma", "n_scenes",
        "seed", "target_head", "target_body", "target_tail",
        // grouping
        "grouping", "t_head", "t_body",
        // training
        "mode", "iters", "lr", "batch", "alpha", "focal_gamma", "undersample_ratio",
        "poly", "poly_power", "head_loss_weight", "stage2_iters", "stage2_lr",
        "stage2_balanced",
        "F1", "F2", "r",
        // evaluation
        "combiner", "distribution", "replicas",
    };
    return keys;
}

struct ExperimentConfig {
    std::map<std::string, std::string> values;

    void set(const std::string& key, const std::string& value) {
        if (!known_keys().count(key))
            throw std::invalid_argument("unknown config key '" + key + "'");
        values[key] = value;
    }

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            std::size_t pos = 0;
            long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': expected integer, got '" +
                                        it->second + "'");
        }
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': expected number, got '" +
                                        it->second + "'");
        }
    }
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    if (const char* env = std::getenv("MEDOE_SEED")) cfg.set("seed", env);
}

GeneratorConfig generator_config(const ExperimentConfig& cfg) {
    GeneratorConfig g;
    g.H = static_cast<int>(cfg.get_int("H", g.H));
    g.W = static_cast<int>(cfg.get_int("W", g.W));
    g.c = static_cast<int>(cfg.get_int("c", g.c));
    g.n_head = static_cast<int>(cfg.get_int("n_head", g.n_head));
    g.n_body = static_cast<int>(cfg.get_int("n_body", g.n_body));
    g.n_tail = static_cast<int>(cfg.get_int("n_tail", g.n_tail));
    g.D = static_cast<int>(cfg.get_int("D", g.D));
    g.gamma = cfg.get_double("gamma", g.gamma);
    g.sigma = cfg.get_double("sigma", g.sigma);
    g.n_scenes = static_cast<int>(cfg.get_int("n_scenes", g.n_scenes));
    g.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(g.seed)));
    g.target_shares[0] = cfg.get_double("target_head", g.target_shares[0]);
    g.target_shares[1] = cfg.get_double("target_body", g.target_shares[1]);
    g.target_shares[2] = cfg.get_double("target_tail", g.target_shares[2]);
    g.validate();
    return g;
}

TrainMode parse_mode(const std::string& name) {
    if (name == "medoe") return TrainMode::Medoe;
    if (name == "baseline") return TrainMode::Baseline;
    if (name == "mcn") return TrainMode::Mcn;
    if (name == "focal") return TrainMode::Focal;
    if (name == "undersample") return TrainMode::UnderSample;
    throw std::invalid_argument("unknown mode '" + name +
                                "' (expected medoe|baseline|mcn|focal|undersample)");
}

const char* mode_label(TrainMode m) {
    switch (m) {
    case TrainMode::Medoe: return "medoe";
    case TrainMode::Baseline: return "baseline";
    case TrainMode::Mcn: return "mcn";
    case TrainMode::Focal: return "focal";
    case TrainMode::UnderSample: return "undersample";
    }
    return "?";
}

TrainConfig train_config(const ExperimentConfig& cfg) {
    TrainConfig t;
    t.mode = parse_mode(cfg.get("mode", "medoe"));
    t.iters = static_cast<int>(cfg.get_int("iters", t.iters));
    t.lr = cfg.get_double("lr", t.lr);
    t.batch = static_cast<int>(cfg.get_int("batch", t.batch));
    t.alpha = cfg.get_double("alpha", t.alpha);
    t.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(t.seed)));
    t.focal_gamma = cfg.get_double("focal_gamma", t.focal_gamma);
    t.undersample_ratio = cfg.get_double("undersample_ratio", t.undersample_ratio);
    t.poly_schedule = cfg.get_int("poly", 0) != 0;
    t.poly_power = cfg.get_double("poly_power", t.poly_power);
    t.head_loss_weight = cfg.get_double("head_loss_weight", t.head_loss_weight);
    t.stage2_iters = static_cast<int>(cfg.get_int("stage2_iters", t.stage2_iters));
    t.stage2_lr = cfg.get_double("stage2_lr", t.stage2_lr);
    t.stage2_balanced = cfg.get_int("stage2_balanced", t.stage2_balanced ? 1 : 0) != 0;
    t.dims.F1 = static_cast<int>(cfg.get_int("F1", t.dims.F1));
    t.dims.F2 = static_cast<int>(cfg.get_int("F2", t.dims.F2));
    t.dims.r = static_cast<int>(cfg.get_int("r", t.dims.r));
    t.validate();
    return t;
}

GroupingMode grouping_mode(const ExperimentConfig& cfg) {
    const std::string kind = cfg.get("grouping", "explicit");
    if (kind == "explicit") {
        GeneratorConfig g = generator_config(cfg);
        return GroupingMode::explicit_counts(g.n_head, g.n_body, g.n_tail);
    }
    if (kind == "thresholds")
        return GroupingMode::thresholds(cfg.get_double("t_head", 0.01),
                                        cfg.get_double("t_body", 0.001));
    throw std::invalid_argument("unknown grouping '" + kind + "' (expected explicit|thresholds)");
}

// ------------------------------------------------------------- lock file ---

// One experiment directory is owned by one process at a time.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".medoe.lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            if (errno == EEXIST)
                throw std::invalid_argument("experiment directory is locked by another process: " +
                                            path_.string());
            throw IoError("cannot create lock file: " + path_.string());
        }
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

// ---------------------------------------------------------------- output ---

std::string group_label(Group g) {
    switch (g) {
    case Group::Head: return "head";
    case Group::Body: return "body";
    case Group::Tail: return "tail";
    }
    return "?";
}

void print_frequency_table(const FrequencyProfile& prof, const CategoryGrouping& grouping) {
    std::printf("%-10s %-6s %-12s %-10s %s\n", "category", "rank", "pixels", "frequency",
                "group");
    for (std::size_t rank = 0; rank < grouping.order.size(); ++rank) {
        const int cat = grouping.order[rank];
        std::printf("%-10d %-6zu %-12llu %-10.6f %s\n", cat, rank,
                    static_cast<unsigned long long>(prof.counts[cat]), prof.freqs[cat],
                    group_label(grouping.group_of[cat]).c_str());
    }
}

json config_json(const ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.values) j[k] = v;
    return j;
}

json report_json(const EvalResult& res, const TrainedModel& model, const ExperimentConfig& cfg,
                 const std::string& combiner, const std::string& distribution) {
    const MetricsReport& m = res.metrics;
    const CategoryGrouping& g = model.grouping;
    json j;
    j["schema"] = "medoe-report-v1";
    j["combiner"] = combiner;
    j["distribution"] = distribution;
    j["mode"] = mode_label(model.config.mode);
    j["config"] = config_json(cfg);

    json cats = json::array();
    for (int i = 0; i < res.cm.c; ++i) {
        json row;
        row["category"] = i;
        row["group"] = group_label(g.group_of[i]);
        row["included"] = static_cast<bool>(m.included[i]);
        row["gt_count"] = m.gt_count[i];
        row["pred_count"] = m.pred_count[i];
        row["acc"] = m.acc[i];
        row["iou"] = m.iou[i];
        row["frequency"] = res.eval_profile.freqs[i];
        cats.push_back(std::move(row));
    }
    j["per_category"] = std::move(cats);

    auto group_obj = [](const GroupMetrics& gm) {
        json o;
        o["macc"] = gm.macc;
        o["miou"] = gm.miou;
        o["included"] = gm.included;
        return o;
    };
    j["groups"] = {{"head", group_obj(m.head)},
                   {"body", group_obj(m.body)},
                   {"tail", group_obj(m.tail)}};
    j["overall"] = group_obj(m.overall);
    if (m.pearson_freq_acc)
        j["pearson"] = *m.pearson_freq_acc;
    else
        j["pearson"] = nullptr;

    json diag;
    auto id = identity_checks(res.cm);
    diag["identity_checks_ok"] = id.ok;
    diag["total_pixels"] = res.cm.total();
    j["diagnostics"] = std::move(diag);

    json cm = json::array();
    for (int i = 0; i < res.cm.c; ++i) {
        json row = json::array();
        for (int k = 0; k < res.cm.c; ++k) row.push_back(res.cm.at(i, k));
        cm.push_back(std::move(row));
    }
    j["confusion"] = std::move(cm);
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
    std::ostringstream s;
    s << "gt\\pred";
    for (int j = 0; j < cm.c; ++j) s << "," << j;
    s << "\n";
    for (int i = 0; i < cm.c; ++i) {
        s << i;
        for (int j = 0; j < cm.c; ++j) s << "," << cm.at(i, j);
        s << "\n";
    }
    write_text(path, s.str());
}

void write_plot_csv(const std::string& path, const EvalResult& res, const CategoryGrouping& g) {
    std::ostringstream s;
    s << "category,rank,frequency,group,acc,iou\n";
    std::vector<int> rank_of(g.order.size());
    for (std::size_t r = 0; r < g.order.size(); ++r) rank_of[g.order[r]] = static_cast<int>(r);
    char buf[64];
    for (int i = 0; i < res.cm.c; ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g,%s,%.9g,%.9g", res.eval_profile.freqs[i],
                      group_label(g.group_of[i]).c_str(), res.metrics.acc[i],
                      res.metrics.iou[i]);
        s << i << "," << rank_of[i] << "," << buf << "\n";
    }
    write_text(path, s.str());
}

void print_summary(const MetricsReport& m) {
    std::printf("overall: mAcc %.4f  mIoU %.4f  (%d categories)\n", m.overall.macc,
                m.overall.miou, m.overall.included);
    std::printf("head:    mAcc %.4f  mIoU %.4f\n", m.head.macc, m.head.miou);
    std::printf("body:    mAcc %.4f  mIoU %.4f\n", m.body.macc, m.body.miou);
    std::printf("tail:    mAcc %.4f  mIoU %.4f\n", m.tail.macc, m.tail.miou);
    if (m.pearson_freq_acc)
        std::printf("pearson(freq, acc): %.4f\n", *m.pearson_freq_acc);
    else
        std::printf("pearson(freq, acc): undefined\n");
}

ConfusionMatrix confusion_from_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open report: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": not a valid report JSON: " + e.what());
    }
    if (!j.contains("confusion") || !j["confusion"].is_array())
        throw std::invalid_argument(path + ": report has no embedded confusion matrix");
    const auto& rows = j["confusion"];
    ConfusionMatrix cm(static_cast<int>(rows.size()));
    for (int i = 0; i < cm.c; ++i) {
        if (static_cast<int>(rows[i].size()) != cm.c)
            throw std::invalid_argument(path + ": confusion matrix is not square");
        for (int k = 0; k < cm.c; ++k) cm.at(i, k) = rows[i][k].get<std::uint64_t>();
    }
    return cm;
}

CategoryGrouping dataset_grouping(const DatasetFile& ds, const ExperimentConfig& cfg) {
    auto prof = compute_frequency(ds.scenes, ds.c);
    return make_grouping(prof, grouping_mode(cfg));
}

// ------------------------------------------------------------- commands ----

int cmd_gen(const ExperimentConfig& cfg, const std::string& out) {
    GeneratorConfig g = generator_config(cfg);
    DatasetFile ds;
    ds.H = g.H;
    ds.W = g.W;
    ds.c = g.c;
    ds.D = g.D;
    ds.seed = g.seed;
    ds.scenes = generate_dataset(g);
    write_dataset(out, ds);

    auto prof = compute_frequency(ds.scenes, g.c);
    auto grouping = make_grouping(prof, grouping_mode(cfg));
    std::printf("wrote %s: %d scenes of %dx%d, %d categories, D=%d, seed=%llu\n", out.c_str(),
                static_cast<int>(ds.scenes.size()), g.H, g.W, g.c, g.D,
                static_cast<unsigned long long>(g.seed));
    print_frequency_table(prof, grouping);
    return 0;
}

int cmd_freq(const ExperimentConfig& cfg, const std::string& data_path) {
    auto ds = read_dataset(data_path);
    auto prof = compute_frequency(ds.scenes, ds.c);
    auto grouping = make_grouping(prof, grouping_mode(cfg));
    std::printf("%s: %d scenes, %llu labeled pixels\n", data_path.c_str(),
                static_cast<int>(ds.scenes.size()),
                static_cast<unsigned long long>(prof.total));
    print_frequency_table(prof, grouping);
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data_path,
              const std::string& out_dir) {
    auto ds = read_dataset(data_path);
    auto grouping = dataset_grouping(ds, cfg);
    TrainConfig tc = train_config(cfg);

    DirLock lock(out_dir);
    auto model = train_stage1(ds.scenes, grouping, tc);
    const fs::path dir(out_dir);
    write_checkpoint((dir / "model.medc").string(), model);
    write_trace_csv((dir / "trace.csv").string(), model);
    std::printf("wrote %s (mode=%s, %d experts, %d iters)\n",
                (dir / "model.medc").string().c_str(), mode_label(tc.mode), model.num_experts(),
                tc.iters);
    return 0;
}

int cmd_train_moe(const ExperimentConfig& cfg, const std::string& data_path,
                  const std::string& checkpoint, const std::string& out_dir) {
    auto ds = read_dataset(data_path);
    auto model = read_checkpoint(checkpoint);
    if (model.num_experts() < 2)
        throw std::invalid_argument(
            "train-moe needs a multi-expert checkpoint (mode medoe or mcn)");
    TrainConfig tc = train_config(cfg);
    tc.mode = model.config.mode;

    DirLock lock(out_dir);
    train_stage2_moe(model, ds.scenes, tc);
    const fs::path dir(out_dir);
    write_checkpoint((dir / "model.medc").string(), model);
    write_trace_csv((dir / "trace.csv").string(), model);
    std::printf("wrote %s with trained calibration (%d stage-2 iters)\n",
                (dir / "model.medc").string().c_str(), tc.stage2_iters);
    return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& data_path,
             const std::string& checkpoint, const std::string& out_dir) {
    auto ds = read_dataset(data_path);
    auto model = read_checkpoint(checkpoint);
    const std::string combiner_name = cfg.get("combiner", "moe");
    const std::string distribution = cfg.get("distribution", "longtail");
    auto combiner = CombinerChoice::parse(combiner_name);

    std::vector<SceneSample> scenes = ds.scenes;
    if (distribution == "uniform")
        scenes = uniform_resample(scenes, ds.c, std::nullopt,
                                  static_cast<std::uint64_t>(cfg.get_int("seed", 0)));
    else if (distribution != "longtail")
        throw std::invalid_argument("unknown distribution '" + distribution +
                                    "' (expected longtail|uniform)");

    DirLock lock(out_dir);
    auto res = evaluate(model, scenes, combiner);
    const fs::path dir(out_dir);
    auto j = report_json(res, model, cfg, combiner.name(), distribution);
    write_text((dir / "report.json").string(), j.dump(2) + "\n");
    write_confusion_csv((dir / "confusion.csv").string(), res.cm);
    write_plot_csv((dir / "plot.csv").string(), res, model.grouping);
    std::printf("combiner=%s distribution=%s on %s\n", combiner.name().c_str(),
                distribution.c_str(), data_path.c_str());
    print_summary(res.metrics);
    return 0;
}

int cmd_bias(const ExperimentConfig& cfg, const std::string& train_path,
             const std::string& test_path, const std::string& out_dir) {
    auto train_ds = read_dataset(train_path);
    auto test_ds = read_dataset(test_path);
    auto grouping = dataset_grouping(train_ds, cfg);
    TrainConfig tc = train_config(cfg);
    const int R = static_cast<int>(cfg.get_int("replicas", 3));
    auto combiner = CombinerChoice::parse(cfg.get("combiner", "single:1"));

    DirLock lock(out_dir);
    auto replicas = train_replicas(train_ds.scenes, grouping, tc, R);
    if (combiner.kind == Combiner::Moe)
        for (auto& m : replicas) train_stage2_moe(m, train_ds.scenes, m.config);
    auto est = bias_estimate(replicas, test_ds.scenes, combiner);

    json j;
    j["schema"] = "medoe-bias-v1";
    j["combiner"] = combiner.name();
    j["replicas"] = R;
    j["config"] = config_json(cfg);
    json cats = json::array();
    for (std::size_t i = 0; i < est.per_category.size(); ++i) {
        json row;
        row["category"] = i;
        row["group"] = group_label(grouping.group_of[i]);
        row["bias"] = est.per_category[i];
        row["pixels"] = est.pixel_count[i];
        cats.push_back(std::move(row));
    }
    j["per_category"] = std::move(cats);
    j["groups"] = {{"head", est.head}, {"body", est.body}, {"tail", est.tail}};
    write_text((fs::path(out_dir) / "bias.json").string(), j.dump(2) + "\n");
    std::printf("bias (%s, R=%d): head %.4f  body %.4f  tail %.4f\n", combiner.name().c_str(), R,
                est.head, est.body, est.tail);
    return 0;
}

int cmd_diag(const std::string& baseline_path, const std::string& improved_path,
             const std::string& out_path) {
    auto base = confusion_from_report(baseline_path);
    auto improved = confusion_from_report(improved_path);
    auto diag = delta_fp_diagnostic(base, improved);

    json j;
    j["schema"] = "medoe-diag-v1";
    j["baseline"] = baseline_path;
    j["improved"] = improved_path;
    json cats = json::array();
    for (std::size_t i = 0; i < diag.categories.size(); ++i) {
        const auto& d = diag.categories[i];
        json row;
        row["category"] = i;
        row["computable"] = d.computable;
        row["p"] = d.p;
        row["predicted_delta_fp"] = d.predicted_delta_fp;
        row["actual_delta_fp"] = d.actual_delta_fp;
        row["effectiveness_ratio"] = d.effectiveness_ratio;
        row["effective"] = d.effective;
        cats.push_back(std::move(row));
    }
    j["per_category"] = std::move(cats);
    write_text(out_path, j.dump(2) + "\n");
    std::printf("wrote %s (%d categories)\n", out_path.c_str(),
                static_cast<int>(diag.categories.size()));
    return 0;
}

int cmd_report(const std::string& report_path) {
    std::ifstream f(report_path);
    if (!f) throw IoError("cannot open report: " + report_path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(report_path + ": not a valid report JSON: " + e.what());
    }
    std::printf("report %s  combiner=%s  distribution=%s  mode=%s\n", report_path.c_str(),
                j.value("combiner", "?").c_str(), j.value("distribution", "?").c_str(),
                j.value("mode", "?").c_str());
    auto show = [&](const char* name) {
        if (!j.contains("groups") || !j["groups"].contains(name)) return;
        const auto& g = j["groups"][name];
        std::printf("%-7s  mAcc %.4f  mIoU %.4f\n", name, g.value("macc", 0.0),
                    g.value("miou", 0.0));
    };
    if (j.contains("overall"))
        std::printf("overall  mAcc %.4f  mIoU %.4f\n", j["overall"].value("macc", 0.0),
                    j["overall"].value("miou", 0.0));
    show("head");
    show("body");
    show("tail");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MEDOE: multi-expert decoder and output ensemble experiments on a synthetic "
                 "long-tailed segmentation benchmark"};
    app.require_subcommand(1);

    std::string config_path, data_path, test_path, checkpoint, out, out_dir = "experiment";
    std::string baseline_report, improved_report;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--set", sets, "override a config key, e.g. --set seed=1")
            ->take_all();
    };

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(gen);
    gen->add_option("--out", out, "output dataset path (.meds)")->required();

    auto* freq = app.add_subcommand("freq", "print frequency profile and grouping of a dataset");
    add_common(freq);
    freq->add_option("--data", data_path, "dataset path")->required();

    auto* train = app.add_subcommand("train", "stage-1 training");
    add_common(train);
    train->add_option("--data", data_path, "training dataset")->required();
    train->add_option("--out-dir", out_dir, "experiment directory");

    auto* train_moe = app.add_subcommand("train-moe", "stage-2 MOE calibration training");
    add_common(train_moe);
    train_moe->add_option("--data", data_path, "training dataset")->required();
    train_moe->add_option("--checkpoint", checkpoint, "stage-1 checkpoint")->required();
    train_moe->add_option("--out-dir", out_dir, "experiment directory");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval);
    eval->add_option("--data", data_path, "evaluation dataset")->required();
    eval->add_option("--checkpoint", checkpoint, "checkpoint to score")->required();
    eval->add_option("--out-dir", out_dir, "experiment directory");

    auto* bias = app.add_subcommand("bias", "replica-mean bias estimate");
    add_common(bias);
    bias->add_option("--data", data_path, "training dataset")->required();
    bias->add_option("--test", test_path, "evaluation dataset")->required();
    bias->add_option("--out-dir", out_dir, "experiment directory");

    auto* diag = app.add_subcommand("diag", "predicted vs actual delta-FP diagnostic");
    diag->add_option("--baseline", baseline_report, "baseline report.json")->required();
    diag->add_option("--improved", improved_report, "improved report.json")->required();
    diag->add_option("--out", out, "output diagnostic JSON")->required();

    auto* report_cmd = app.add_subcommand("report", "print a saved report");
    report_cmd->add_option("--report", baseline_report, "report.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        apply_overrides(cfg, sets);

        if (gen->parsed()) return cmd_gen(cfg, out);
        if (freq->parsed()) return cmd_freq(cfg, data_path);
        if (train->parsed()) return cmd_train(cfg, data_path, out_dir);
        if (train_moe->parsed()) return cmd_train_moe(cfg, data_path, checkpoint, out_dir);
        if (eval->parsed()) return cmd_eval(cfg, data_path, checkpoint, out_dir);
        if (bias->parsed()) return cmd_bias(cfg, data_path, test_path, out_dir);
        if (diag->parsed()) return cmd_diag(baseline_report, improved_report, out);
        if (report_cmd->parsed()) return cmd_report(baseline_report);
        std::fprintf(stderr, "no subcommand\n");
        return 1;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
