#include "medoe/io.hpp"

#include <cinttypes>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace medoe {
namespace {

void write_bytes(std::ofstream& f, const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& f, void* p, std::size_t n, const std::string& path) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!f) throw IoError("truncated file: " + path);
}

void write_u32(std::ofstream& f, std::uint32_t v) { write_bytes(f, &v, 4); }
void write_u64(std::ofstream& f, std::uint64_t v) { write_bytes(f, &v, 8); }

std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
    std::uint32_t v;
    read_bytes(f, &v, 4, path);
    return v;
}

std::uint64_t read_u64(std::ifstream& f, const std::string& path) {
    std::uint64_t v;
    read_bytes(f, &v, 8, path);
    return v;
}

void expect_magic(std::ifstream& f, const char* magic, const std::string& path) {
    char buf[4];
    read_bytes(f, buf, 4, path);
    if (std::memcmp(buf, magic, 4) != 0)
        throw IoError(path + ": bad magic, expected " + magic);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    return f;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* mode_name(TrainMode m) {
    switch (m) {
    case TrainMode::Medoe: return "medoe";
    case TrainMode::Baseline: return "baseline";
    case TrainMode::Mcn: return "mcn";
    case TrainMode::Focal: return "focal";
    case TrainMode::UnderSample: return "undersample";
    }
    return "?";
}

TrainMode mode_from_name(const std::string& s) {
    if (s == "medoe") return TrainMode::Medoe;
    if (s == "baseline") return TrainMode::Baseline;
    if (s == "mcn") return TrainMode::Mcn;
    if (s == "focal") return TrainMode::Focal;
    if (s == "undersample") return TrainMode::UnderSample;
    throw IoError("unknown train mode '" + s + "'");
}

} // namespace

void write_dataset(const std::string& path, const DatasetFile& ds) {
    auto f = open_out(path);
    write_bytes(f, "MEDS", 4);
    write_u32(f, 1);
    write_u32(f, static_cast<std::uint32_t>(ds.H));
    write_u32(f, static_cast<std::uint32_t>(ds.W));
    write_u32(f, static_cast<std::uint32_t>(ds.c));
    write_u32(f, static_cast<std::uint32_t>(ds.D));
    write_u32(f, static_cast<std::uint32_t>(ds.scenes.size()));
    write_u64(f, ds.seed);
    for (const auto& s : ds.scenes) {
        write_bytes(f, s.features.data(), s.features.size() * sizeof(float));
        write_bytes(f, s.labels.data(), s.labels.size());
    }
    if (!f) throw IoError("write failed: " + path);
}

DatasetFile read_dataset(const std::string& path) {
    auto f = open_in(path);
    expect_magic(f, "MEDS", path);
    const std::uint32_t version = read_u32(f, path);
    if (version != 1) throw IoError(path + ": unsupported MEDS version");
    DatasetFile ds;
    ds.H = static_cast<int>(read_u32(f, path));
    ds.W = static_cast<int>(read_u32(f, path));
    ds.c = static_cast<int>(read_u32(f, path));
    ds.D = static_cast<int>(read_u32(f, path));
    const std::uint32_t n = read_u32(f, path);
    ds.seed = read_u64(f, path);
    ds.scenes.resize(n);
    for (auto& s : ds.scenes) {
        s.H = ds.H;
        s.W = ds.W;
        s.D = ds.D;
        s.features.resize(static_cast<std::size_t>(ds.H) * ds.W * ds.D);
        s.labels.resize(static_cast<std::size_t>(ds.H) * ds.W);
        read_bytes(f, s.features.data(), s.features.size() * sizeof(float), path);
        read_bytes(f, s.labels.data(), s.labels.size(), path);
        s.validate(ds.c);
    }
    return ds;
}

void write_checkpoint(const std::string& path, const TrainedModel& model) {
    const TrainConfig& cfg = model.config;
    const int K = model.num_experts();
    std::ostringstream h;
    h << "K=" << K << "\n";
    h << "D=" << model.backbone.D << "\n";
    h << "F1=" << model.backbone.F1 << "\n";
    h << "F2=" << model.experts[0].F2 << "\n";
    h << "c=" << model.experts[0].c << "\n";
    h << "r=" << model.experts[0].r << "\n";
    h << "mode=" << mode_name(cfg.mode) << "\n";
    h << "seed=" << cfg.seed << "\n";
    h << "iters=" << cfg.iters << "\n";
    h << "lr=" << fmt_double(cfg.lr) << "\n";
    h << "batch=" << cfg.batch << "\n";
    h << "alpha=" << fmt_double(cfg.alpha) << "\n";
    h << "focal_gamma=" << fmt_double(cfg.focal_gamma) << "\n";
    h << "undersample_ratio=" << fmt_double(cfg.undersample_ratio) << "\n";
    h << "poly=" << (cfg.poly_schedule ? 1 : 0) << "\n";
    h << "poly_power=" << fmt_double(cfg.poly_power) << "\n";
    h << "head_loss_weight=" << fmt_double(cfg.head_loss_weight) << "\n";
    h << "stage2_iters=" << cfg.stage2_iters << "\n";
    h << "stage2_lr=" << fmt_double(cfg.stage2_lr) << "\n";
    h << "stage2_balanced=" << (cfg.stage2_balanced ? 1 : 0) << "\n";
    h << "order=";
    for (std::size_t i = 0; i < model.grouping.order.size(); ++i)
        h << (i ? "," : "") << model.grouping.order[i];
    h << "\n";
    h << "c_b=" << model.grouping.c_b << "\n";
    h << "c_t=" << model.grouping.c_t << "\n";
    h << "calibration=" << (model.calibration ? 1 : 0) << "\n";
    h << "arrays=W1,b1";
    for (int i = 0; i < K; ++i) h << ",e" << i << ".Wc,e" << i << ".bc,e" << i << ".Wh,e" << i << ".bh";
    if (model.calibration) h << ",calib.w,calib.beta";
    h << "\n";
    const std::string header = h.str();

    auto f = open_out(path);
    write_bytes(f, "MEDC", 4);
    write_u32(f, 1);
    write_u32(f, static_cast<std::uint32_t>(header.size()));
    write_bytes(f, header.data(), header.size());

    auto dump = [&](const std::vector<double>& v) {
        write_bytes(f, v.data(), v.size() * sizeof(double));
    };
    dump(model.backbone.W1);
    dump(model.backbone.b1);
    for (const auto& e : model.experts) {
        dump(e.Wc);
        dump(e.bc);
        dump(e.Wh);
        dump(e.bh);
    }
    if (model.calibration) {
        dump(model.calibration->w);
        dump(model.calibration->beta);
    }
    if (!f) throw IoError("write failed: " + path);
}

TrainedModel read_checkpoint(const std::string& path) {
    auto f = open_in(path);
    expect_magic(f, "MEDC", path);
    if (read_u32(f, path) != 1) throw IoError(path + ": unsupported MEDC version");
    const std::uint32_t hlen = read_u32(f, path);
    std::string header(hlen, '\0');
    read_bytes(f, header.data(), hlen, path);

    std::map<std::string, std::string> kv;
    std::istringstream hs(header);
    std::string line;
    while (std::getline(hs, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError(path + ": missing header key " + key);
        return it->second;
    };

    TrainedModel m;
    TrainConfig& cfg = m.config;
    const int K = std::stoi(get("K"));
    cfg.dims.D = std::stoi(get("D"));
    cfg.dims.F1 = std::stoi(get("F1"));
    cfg.dims.F2 = std::stoi(get("F2"));
    cfg.dims.c = std::stoi(get("c"));
    cfg.dims.r = std::stoi(get("r"));
    cfg.dims.K = K;
    cfg.mode = mode_from_name(get("mode"));
    cfg.seed = std::stoull(get("seed"));
    cfg.iters = std::stoi(get("iters"));
    cfg.lr = std::stod(get("lr"));
    cfg.batch = std::stoi(get("batch"));
    cfg.alpha = std::stod(get("alpha"));
    cfg.focal_gamma = std::stod(get("focal_gamma"));
    cfg.undersample_ratio = std::stod(get("undersample_ratio"));
    cfg.poly_schedule = get("poly") == "1";
    cfg.poly_power = std::stod(get("poly_power"));
    cfg.head_loss_weight = std::stod(get("head_loss_weight"));
    cfg.stage2_iters = std::stoi(get("stage2_iters"));
    cfg.stage2_lr = std::stod(get("stage2_lr"));
    cfg.stage2_balanced = get("stage2_balanced") == "1";

    // Grouping reconstructed from the rank order and split points.
    CategoryGrouping& g = m.grouping;
    {
        std::istringstream os(get("order"));
        std::string tok;
        while (std::getline(os, tok, ',')) g.order.push_back(std::stoi(tok));
    }
    g.c_b = std::stoi(get("c_b"));
    g.c_t = std::stoi(get("c_t"));
    const int c = cfg.dims.c;
    if (static_cast<int>(g.order.size()) != c) throw IoError(path + ": bad order list");
    g.group_of.assign(c, Group::Head);
    for (int rank = 0; rank < c; ++rank)
        g.group_of[g.order[rank]] =
            rank < g.c_b ? Group::Head : (rank < g.c_t ? Group::Body : Group::Tail);
    g.sets.assign(3, std::vector<std::uint8_t>(c, 0));
    for (int cat = 0; cat < c; ++cat) {
        g.sets[0][cat] = 1;
        if (g.group_of[cat] != Group::Head) g.sets[1][cat] = 1;
        if (g.group_of[cat] == Group::Tail) g.sets[2][cat] = 1;
    }

    auto load = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        read_bytes(f, v.data(), n * sizeof(double), path);
    };
    m.backbone.D = cfg.dims.D;
    m.backbone.F1 = cfg.dims.F1;
    load(m.backbone.W1, static_cast<std::size_t>(cfg.dims.F1) * cfg.dims.D);
    load(m.backbone.b1, cfg.dims.F1);
    m.experts.resize(K);
    for (auto& e : m.experts) {
        e.F1 = cfg.dims.F1;
        e.F2 = cfg.dims.F2;
        e.c = c;
        e.r = cfg.dims.r;
        load(e.Wc, static_cast<std::size_t>(cfg.dims.F2) * 2 * cfg.dims.F1);
        load(e.bc, cfg.dims.F2);
        load(e.Wh, static_cast<std::size_t>(c) * cfg.dims.F2);
        load(e.bh, c);
    }
    if (get("calibration") == "1") {
        CalibrationParams cal;
        cal.K = K;
        cal.c = c;
        load(cal.w, static_cast<std::size_t>(K) * c);
        load(cal.beta, static_cast<std::size_t>(K) * c);
        m.calibration = std::move(cal);
    }
    return m;
}

void write_probability_dump(const std::string& path, int H, int W, int c,
                            const std::vector<std::vector<ProbabilityGrid>>& per_scene) {
    auto f = open_out(path);
    const int K = per_scene.empty() ? 0 : static_cast<int>(per_scene[0].size());
    write_bytes(f, "MEDP", 4);
    write_u32(f, 1);
    write_u32(f, static_cast<std::uint32_t>(K));
    write_u32(f, static_cast<std::uint32_t>(H));
    write_u32(f, static_cast<std::uint32_t>(W));
    write_u32(f, static_cast<std::uint32_t>(c));
    write_u32(f, static_cast<std::uint32_t>(per_scene.size()));
    std::vector<float> buf;
    for (const auto& experts : per_scene)
        for (const auto& grid : experts) {
            buf.resize(grid.data.size());
            for (std::size_t i = 0; i < buf.size(); ++i)
                buf[i] = static_cast<float>(grid.data[i]);
            write_bytes(f, buf.data(), buf.size() * sizeof(float));
        }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<std::vector<ProbabilityGrid>> read_probability_dump(const std::string& path, int& H,
                                                                int& W, int& c) {
    auto f = open_in(path);
    expect_magic(f, "MEDP", path);
    if (read_u32(f, path) != 1) throw IoError(path + ": unsupported MEDP version");
    const int K = static_cast<int>(read_u32(f, path));
    H = static_cast<int>(read_u32(f, path));
    W = static_cast<int>(read_u32(f, path));
    c = static_cast<int>(read_u32(f, path));
    const int n = static_cast<int>(read_u32(f, path));
    std::vector<std::vector<ProbabilityGrid>> out(n);
    std::vector<float> buf(static_cast<std::size_t>(H) * W * c);
    for (auto& experts : out) {
        experts.assign(K, ProbabilityGrid(H * W, c));
        for (auto& grid : experts) {
            read_bytes(f, buf.data(), buf.size() * sizeof(float), path);
            for (std::size_t i = 0; i < buf.size(); ++i) grid.data[i] = buf[i];
        }
    }
    return out;
}

void write_trace_csv(const std::string& path, const TrainedModel& model) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "step,expert,l_ce,l_aux,total\n";
    for (const auto& row : model.trace)
        f << row.step << "," << row.expert << "," << fmt_double(row.l_ce) << ","
          << fmt_double(row.l_aux) << "," << fmt_double(row.total) << "\n";
    for (const auto& row : model.stage2_trace)
        f << row.step << "," << row.expert << "," << fmt_double(row.l_ce) << ","
          << fmt_double(row.l_aux) << "," << fmt_double(row.total) << "\n";
    if (!f) throw IoError("write failed: " + path);
}

} // namespace medoe
