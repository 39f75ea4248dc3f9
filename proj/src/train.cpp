#include "dparnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "dparnet/errors.hpp"
#include "dparnet/metrics.hpp"

namespace dparnet {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("lr must be > 0");
    if (alpha1 < 0.0 || alpha2 < 0.0) throw ConfigError("loss weights must be >= 0");
    if (epochs < 1 || batch_size < 1) throw ConfigError("epochs and batch_size must be >= 1");
    if (crop < 8) throw ConfigError("crop must be >= 8");
    if (val_every < 1) throw ConfigError("val_every must be >= 1");
}

Adam::Adam(ParamList params, double lr) : lr_(lr) {
    slots_.reserve(params.size());
    for (ParamEntry& p : params) {
        Tensor m(p.var->value.shape());
        Tensor v(p.var->value.shape());
        slots_.push_back({std::move(p), std::move(m), std::move(v)});
    }
}

void Adam::zero_grad() {
    for (Slot& s : slots_)
        if (s.entry.var->grad_ready) std::fill(s.entry.var->grad.d.begin(), s.entry.var->grad.d.end(), 0.0);
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (Slot& s : slots_) {
        if (!s.entry.var->grad_ready) continue;
        Tensor& w = s.entry.var->value;
        const Tensor& g = s.entry.var->grad;
        for (int64_t i = 0; i < w.numel(); ++i) {
            s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g[i];
            s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::vector<std::pair<std::string, Tensor>> Adam::state() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("step", Tensor::scalar(static_cast<double>(t_)));
    for (const Slot& s : slots_) {
        out.emplace_back(s.entry.name + ".m", s.m);
        out.emplace_back(s.entry.name + ".v", s.v);
    }
    return out;
}

std::vector<Tensor> snapshot_params(const ParamList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const ParamEntry& p : params) out.push_back(p.var->value);
    return out;
}

void restore_params(const ParamList& params, const std::vector<Tensor>& snap) {
    if (params.size() != snap.size())
        throw std::invalid_argument("restore_params: snapshot size mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i].var->value = snap[i];
}

// ---------------------------------------------------------------------------

namespace {

Tensor stack_frames(const std::vector<Sample>& batch,
                    const std::function<const Frame&(const Sample&)>& pick) {
    const Frame& first = pick(batch[0]);
    Tensor t({static_cast<int>(batch.size()), first.c, first.h, first.w});
    int64_t off = 0;
    for (const Sample& s : batch) {
        const Frame& f = pick(s);
        std::copy(f.data.begin(), f.data.end(), t.d.begin() + off);
        off += static_cast<int64_t>(f.data.size());
    }
    return t;
}

Tensor stack_pmaps(const std::vector<Sample>& batch) {
    const ParamMap& first = batch[0].pmap;
    Tensor t({static_cast<int>(batch.size()), 1, first.h, first.w});
    int64_t off = 0;
    for (const Sample& s : batch)
        for (float v : s.pmap.values) t[off++] = static_cast<double>(v);
    return t;
}

Tensor stack_mean_frames(const std::vector<Sample>& batch) {
    std::vector<Frame> means;
    means.reserve(batch.size());
    for (const Sample& s : batch) means.push_back(temporal_mean(s.degraded));
    Tensor t({static_cast<int>(batch.size()), means[0].c, means[0].h, means[0].w});
    int64_t off = 0;
    for (const Frame& f : means) {
        std::copy(f.data.begin(), f.data.end(), t.d.begin() + off);
        off += static_cast<int64_t>(f.data.size());
    }
    return t;
}

std::vector<Sample> preload(const DatasetManifest& manifest, const std::vector<std::string>& ids) {
    std::vector<Sample> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
        Sample s = load_sample(manifest, id, 1 << 20);  // clamps to last frame
        s.target_index = s.degraded.length() / 2;       // center target
        out.push_back(std::move(s));
    }
    return out;
}

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.next_u64() % i]);
}

void check_finite(double loss) {
    if (!std::isfinite(loss)) throw NumericError("training loss is not finite (NaN/Inf)");
}

std::vector<std::string> val_ids_or_fallback(const DatasetManifest& manifest, std::ostream* log) {
    std::vector<std::string> ids = manifest.ids_in_split("val");
    if (!ids.empty()) return ids;
    std::vector<std::string> train = manifest.ids_in_split("train");
    train.resize(std::min<size_t>(train.size(), 2));
    if (log) *log << "# no val split; validating on " << train.size() << " train sequences\n";
    return train;
}

}  // namespace

TrainResult train_param_net(ParamNet& net, const DatasetManifest& manifest,
                            const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    const std::vector<std::string> train_ids = manifest.ids_in_split("train");
    if (train_ids.empty()) throw ConfigError("train split is empty");
    const std::vector<std::string> val_ids = val_ids_or_fallback(manifest, log);

    std::vector<Sample> train_samples = preload(manifest, train_ids);
    std::vector<Sample> val_samples = preload(manifest, val_ids);

    Adam opt(net.named_parameters(), cfg.lr);
    TrainResult result;
    result.best_val = 1e300;  // MAE, lower better
    std::vector<Tensor> best = snapshot_params(net.named_parameters());

    auto validate = [&]() {
        double mae = 0.0;
        for (const Sample& s : val_samples) {
            Var pred = net.forward(make_input(stack_mean_frames({s})));
            double acc = 0.0;
            for (size_t i = 0; i < s.pmap.values.size(); ++i)
                acc += std::abs(pred->value[static_cast<int64_t>(i)] -
                                static_cast<double>(s.pmap.values[i]));
            mae += acc / static_cast<double>(s.pmap.values.size());
        }
        return mae / static_cast<double>(val_samples.size());
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<size_t> order(train_samples.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(mix_seed(cfg.seed, 0x65706f63ULL, static_cast<uint64_t>(epoch)));
        shuffle_indices(order, shuffle_rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.batch_size)) {
            std::vector<Sample> batch;
            for (size_t i = pos; i < std::min(order.size(), pos + cfg.batch_size); ++i)
                batch.push_back(augment(train_samples[order[i]],
                                        mix_seed(cfg.seed, static_cast<uint64_t>(epoch), i),
                                        cfg.crop));
            Var input = make_input(stack_mean_frames(batch));
            Var target = make_input(stack_pmaps(batch));
            Var loss = ops::mean_abs_diff(net.forward(input), target);
            check_finite(loss->value[0]);
            opt.zero_grad();
            backward(loss);
            opt.step();
            epoch_loss += loss->value[0];
            ++batches;
        }
        epoch_loss /= std::max(1, batches);

        CurvePoint p{epoch, epoch_loss, result.curve.empty() ? 0.0 : result.curve.back().val_metric};
        if (epoch % cfg.val_every == 0 || epoch == cfg.epochs) {
            p.val_metric = validate();
            if (p.val_metric < result.best_val) {
                result.best_val = p.val_metric;
                result.best_epoch = epoch;
                best = snapshot_params(net.named_parameters());
            }
        }
        result.curve.push_back(p);
        if (log)
            *log << "epoch " << epoch << " loss " << epoch_loss << " val_mae " << p.val_metric
                 << "\n";
    }

    restore_params(net.named_parameters(), best);
    result.opt_state = opt.state();
    return result;
}

double validate_psnr(const DparNet& model, const DatasetManifest& manifest,
                     const std::vector<std::string>& ids, const ParamNet* pnet,
                     bool use_oracle_pmap) {
    if (ids.empty()) throw ConfigError("validate_psnr: no sequences");
    double total = 0.0;
    for (const std::string& id : ids) {
        Sample s = load_sample(manifest, id, 1 << 20);
        const int t = s.degraded.length() / 2;
        const ParamMap* oracle = use_oracle_pmap ? &s.pmap : nullptr;
        Sequence restored =
            dparnet_forward(model, s.degraded, oracle, pnet, task_kind(manifest.task));
        total += psnr(restored.frames[t], s.clean.frames[t]);
    }
    return total / static_cast<double>(ids.size());
}

TrainResult train_dparnet(DparNet& model, const DatasetManifest& manifest, const TrainConfig& cfg,
                          const ParamNet* frozen_pnet, std::ostream* log) {
    cfg.validate();
    if (model.config.wants_pmap() && !cfg.use_oracle_pmap && !frozen_pnet)
        throw ConfigError(std::string("variant ") + variant_name(model.config.variant) +
                          " needs a parameter source: pass a param checkpoint or enable "
                          "oracle maps");

    FeatureExtractor extractor;
    const bool use_perceptual = cfg.alpha2 > 0.0;
    if (use_perceptual) extractor = FeatureExtractor::load(cfg.extractor_path);

    const std::vector<std::string> train_ids = manifest.ids_in_split("train");
    if (train_ids.empty()) throw ConfigError("train split is empty");
    const std::vector<std::string> val_ids = val_ids_or_fallback(manifest, log);

    std::vector<Sample> train_samples = preload(manifest, train_ids);

    Adam opt(model.named_parameters(), cfg.lr);
    TrainResult result;
    result.best_val = -1e300;  // PSNR, higher better
    std::vector<Tensor> best = snapshot_params(model.named_parameters());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<size_t> order(train_samples.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(mix_seed(cfg.seed, 0x65706f63ULL, static_cast<uint64_t>(epoch)));
        shuffle_indices(order, shuffle_rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.batch_size)) {
            std::vector<Sample> batch;
            for (size_t i = pos; i < std::min(order.size(), pos + cfg.batch_size); ++i)
                batch.push_back(augment(train_samples[order[i]],
                                        mix_seed(cfg.seed, static_cast<uint64_t>(epoch), i),
                                        cfg.crop));
            // batches must agree on sequence length; corpora are standardised
            const int t_len = batch[0].degraded.length();
            for (const Sample& s : batch)
                if (s.degraded.length() != t_len)
                    throw ConfigError("training sequences have mixed lengths; rebuild dataset");

            std::vector<Var> frames(static_cast<size_t>(t_len));
            for (int t = 0; t < t_len; ++t)
                frames[static_cast<size_t>(t)] = make_input(stack_frames(
                    batch, [t](const Sample& s) -> const Frame& { return s.degraded.frames[t]; }));

            Var pmap_var;
            if (model.config.wants_pmap()) {
                if (cfg.use_oracle_pmap) {
                    pmap_var = make_input(stack_pmaps(batch));
                } else {
                    Var predicted = frozen_pnet->forward(make_input(stack_mean_frames(batch)));
                    pmap_var = detach(predicted);
                }
            }

            const int t_target = batch[0].target_index;
            Var y = model.forward_target(frames, pmap_var, t_target);
            Var gt = make_input(stack_frames(batch, [t_target](const Sample& s) -> const Frame& {
                return s.clean.frames[t_target];
            }));
            Var loss = total_loss(y, gt, use_perceptual ? &extractor : nullptr, cfg.alpha1,
                                  cfg.alpha2);
            check_finite(loss->value[0]);
            opt.zero_grad();
            backward(loss);
            opt.step();
            epoch_loss += loss->value[0];
            ++batches;
        }
        epoch_loss /= std::max(1, batches);

        CurvePoint p{epoch, epoch_loss, result.curve.empty() ? 0.0 : result.curve.back().val_metric};
        if (epoch % cfg.val_every == 0 || epoch == cfg.epochs) {
            p.val_metric =
                validate_psnr(model, manifest, val_ids, frozen_pnet, cfg.use_oracle_pmap);
            if (p.val_metric > result.best_val) {
                result.best_val = p.val_metric;
                result.best_epoch = epoch;
                best = snapshot_params(model.named_parameters());
            }
        }
        result.curve.push_back(p);
        if (log)
            *log << "epoch " << epoch << " loss " << epoch_loss << " val_psnr " << p.val_metric
                 << "\n";
    }

    restore_params(model.named_parameters(), best);
    result.opt_state = opt.state();
    return result;
}

// ---------------------------------------------------------------------------
// extractor pre-training (see loss.hpp)

namespace {

Frame procedural_texture(int size, Rng& rng) {
    SmoothFieldSpec spec{rng.uniform(2.0, 6.0), 0.1, 0.9, rng.next_u64()};
    Frame f(size, size, 3);
    for (int ch = 0; ch < 3; ++ch) {
        Grid g = smooth_random_field(spec, size, size);
        spec.seed = rng.next_u64();
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) f.at(ch, y, x) = g.at(y, x);
    }
    // hard-edged rectangles give the features something structural
    const int n_rect = 2 + static_cast<int>(rng.next_u64() % 3);
    for (int i = 0; i < n_rect; ++i) {
        const int rw = 4 + static_cast<int>(rng.next_u64() % (size / 2));
        const int rh = 4 + static_cast<int>(rng.next_u64() % (size / 2));
        const int ox = static_cast<int>(rng.next_u64() % (size - rw));
        const int oy = static_cast<int>(rng.next_u64() % (size - rh));
        const double v = rng.uniform(0.05, 0.95);
        for (int ch = 0; ch < 3; ++ch)
            for (int y = oy; y < oy + rh; ++y)
                for (int x = ox; x < ox + rw; ++x) f.at(ch, y, x) = v;
    }
    return f;
}

}  // namespace

FeatureExtractor pretrain_feature_extractor(uint64_t seed, int steps, std::ostream* log) {
    FeatureExtractor fx = FeatureExtractor::create(seed);

    Rng init_rng(mix_seed(seed, 0x64656320ULL));
    ConvT2d up1(64, 32, init_rng);
    ConvT2d up2(32, 16, init_rng);
    Conv2d out(16, 3, 3, 1, 1, init_rng);

    ParamList params = fx.named_parameters();
    up1.collect("dec.up1", params);
    up2.collect("dec.up2", params);
    out.collect("dec.out", params);
    Adam opt(params, 1e-3);

    constexpr int kPatch = 32;
    constexpr int kBatch = 4;
    Rng data_rng(mix_seed(seed, 0x64617461ULL));
    for (int step = 1; step <= steps; ++step) {
        Tensor clean({kBatch, 3, kPatch, kPatch});
        Tensor noisy({kBatch, 3, kPatch, kPatch});
        int64_t off = 0;
        for (int b = 0; b < kBatch; ++b) {
            Frame f = procedural_texture(kPatch, data_rng);
            const double sigma = data_rng.uniform(0.02, 0.3);
            for (double v : f.data) {
                clean[off] = v;
                noisy[off] = std::clamp(v + data_rng.normal() * sigma, 0.0, 1.0);
                ++off;
            }
        }
        Var feats = fx.features(make_input(noisy));
        Var recon = out.forward(ops::relu(up2.forward(ops::relu(up1.forward(feats)))));
        Var loss = ops::mean_abs_diff(recon, make_input(clean));
        check_finite(loss->value[0]);
        opt.zero_grad();
        backward(loss);
        opt.step();
        if (log && step % 50 == 0)
            *log << "pretrain step " << step << " loss " << loss->value[0] << "\n";
    }
    fx.freeze();
    return fx;
}

}  // namespace dparnet
