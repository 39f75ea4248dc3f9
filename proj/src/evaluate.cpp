#include "dparnet/evaluate.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "dparnet/errors.hpp"

using nlohmann::json;

namespace dparnet {

SeqMetrics sequence_metrics(const std::string& seq_id, const Sequence& restored,
                            const Sequence& clean) {
    if (restored.length() != clean.length() || restored.length() == 0)
        throw std::invalid_argument("sequence_metrics: length mismatch");
    SeqMetrics m;
    m.seq_id = seq_id;
    for (int t = 0; t < restored.length(); ++t) {
        m.psnr += psnr(restored.frames[t], clean.frames[t]);
        m.ssim += ssim(restored.frames[t], clean.frames[t]);
        m.nrmse += nrmse(restored.frames[t], clean.frames[t]);
        m.vi += vi(restored.frames[t], clean.frames[t]);
    }
    const double inv = 1.0 / restored.length();
    m.psnr *= inv;
    m.ssim *= inv;
    m.nrmse *= inv;
    m.vi *= inv;
    return m;
}

static std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

MetricsReport evaluate(const DparNet& model, const ParamNet* pnet, bool use_oracle_pmap,
                       const DatasetManifest& manifest, const std::string& split,
                       const std::string& model_id, const std::string& timestamp,
                       std::vector<Sequence>* restored_out) {
    const std::vector<std::string> ids = manifest.ids_in_split(split);
    if (ids.empty()) throw ConfigError("split \"" + split + "\" is empty");
    if (model.config.in_channels != manifest.entries.front().C)
        throw ConfigError("checkpoint channel count does not match the dataset");

    MetricsReport report;
    report.task = task_name(manifest.task);
    report.model_id = model_id;
    report.timestamp = timestamp.empty() ? utc_now() : timestamp;

    for (const std::string& id : ids) {
        Sample s = load_sample(manifest, id, 0);
        const ParamMap* oracle = use_oracle_pmap ? &s.pmap : nullptr;
        Sequence restored =
            dparnet_forward(model, s.degraded, oracle, pnet, task_kind(manifest.task));
        report.per_sequence.push_back(sequence_metrics(id, restored, s.clean));
        if (restored_out) restored_out->push_back(std::move(restored));
    }

    SeqMetrics& agg = report.aggregate;
    agg.seq_id = "mean";
    for (const SeqMetrics& m : report.per_sequence) {
        agg.psnr += m.psnr;
        agg.ssim += m.ssim;
        agg.nrmse += m.nrmse;
        agg.vi += m.vi;
    }
    const double inv = 1.0 / static_cast<double>(report.per_sequence.size());
    agg.psnr *= inv;
    agg.ssim *= inv;
    agg.nrmse *= inv;
    agg.vi *= inv;
    return report;
}

static json metrics_to_json(const SeqMetrics& m) {
    return {{"seq_id", m.seq_id}, {"psnr", m.psnr}, {"ssim", m.ssim}, {"nrmse", m.nrmse},
            {"vi", m.vi}};
}

void write_metrics_report(const MetricsReport& report, const std::string& path) {
    json j;
    j["task"] = report.task;
    j["model_id"] = report.model_id;
    j["timestamp"] = report.timestamp;
    json rows = json::array();
    for (const SeqMetrics& m : report.per_sequence) rows.push_back(metrics_to_json(m));
    j["per_sequence"] = rows;
    j["aggregate"] = metrics_to_json(report.aggregate);
    std::ofstream f(path);
    if (!f) throw IoError("cannot write metrics report: " + path);
    f << j.dump(2) << "\n";
}

std::string format_metrics_table(const MetricsReport& report) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %12s %12s %12s %12s\n", "Sequence",
                  "PSNR (↑)", "SSIM (↑)", "NRMSE (↓)", "VI (↓)");
    os << line;
    auto row = [&](const SeqMetrics& m) {
        std::snprintf(line, sizeof(line), "%-16s %12.4f %12.4f %12.4f %12.4f\n",
                      m.seq_id.c_str(), m.psnr, m.ssim, m.nrmse, m.vi);
        os << line;
    };
    for (const SeqMetrics& m : report.per_sequence) row(m);
    os << std::string(68, '-') << "\n";
    row(report.aggregate);
    return os.str();
}

EfficiencyReport benchmark_efficiency(const DparNet& model, int rounds, int warmups) {
    EfficiencyReport report;
    report.params_millions = static_cast<double>(count_params(model)) / 1e6;
    report.flops_e10 = static_cast<double>(count_flops(model.config, 256, 256)) / 1e10;

    Sequence probe;
    probe.id = "bench";
    probe.frames.emplace_back(256, 256, model.config.in_channels, 0.5);
    ParamMap ones(256, 256, DegradationKind::noise, 100.0, 1.0f);
    const ParamMap* pmap = model.config.wants_pmap() ? &ones : nullptr;

    for (int i = 0; i < warmups; ++i) dparnet_forward(model, probe, pmap, nullptr);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < rounds; ++i) dparnet_forward(model, probe, pmap, nullptr);
    const auto stop = std::chrono::steady_clock::now();
    report.time_s = std::chrono::duration<double>(stop - start).count() / rounds;
    return report;
}

void write_efficiency_report(const EfficiencyReport& report, const std::string& path) {
    json j;
    j["params_millions"] = report.params_millions;
    j["flops_e10"] = report.flops_e10;
    j["time_s"] = report.time_s;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write efficiency report: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace dparnet
