/*
 * Copyright 2026 hflsim contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HFLSIM_LEARNER_HPP
#define HFLSIM_LEARNER_HPP

#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hflsim/common.hpp"
#include "hflsim/content_model.hpp"

namespace hflsim {

inline constexpr int kHidden1 = 512;
inline constexpr int kHidden2 = 256;

/// Flat parameter count of FC(C->512) -> ReLU -> FC(512->256) -> ReLU ->
/// FC(256->C) including biases.
inline std::int64_t model_dim(int num_classes) {
    const std::int64_t c = num_classes;
    return c * kHidden1 + kHidden1 + static_cast<std::int64_t>(kHidden1) * kHidden2 +
           kHidden2 + static_cast<std::int64_t>(kHidden2) * c + c;
}

/// Parameter vector with the layout [W1 | b1 | W2 | b2 | W3 | b3]; weight
/// blocks are stored column-major so W1's columns line up with input classes.
struct ModelParams {
    int num_classes = 0;
    Eigen::VectorXd w;
};

namespace detail {

/// Byte offsets of each layer block inside the flat parameter vector.
struct ParamOffsets {
    std::int64_t b1, w2, b2, w3, b3;

    explicit ParamOffsets(int num_classes) {
        b1 = static_cast<std::int64_t>(num_classes) * kHidden1;
        w2 = b1 + kHidden1;
        b2 = w2 + static_cast<std::int64_t>(kHidden1) * kHidden2;
        w3 = b2 + kHidden2;
        b3 = w3 + static_cast<std::int64_t>(kHidden2) * num_classes;
    }
};

}  // namespace detail

inline ModelParams init_model(int num_classes, std::uint64_t seed) {
    require(num_classes >= 2, "init_model: need at least two classes");
    ModelParams m;
    m.num_classes = num_classes;
    m.w.resize(model_dim(num_classes));

    auto rng = make_rng(seed, StreamTag::model_init);
    auto fill_uniform = [&rng](double* data, std::int64_t count, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::int64_t i = 0; i < count; ++i) data[i] = u(rng);
    };

    detail::ParamOffsets pv(num_classes);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(num_classes));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(kHidden1));
    const double bound3 = 1.0 / std::sqrt(static_cast<double>(kHidden2));
    fill_uniform(m.w.data(), pv.b1, bound1);
    fill_uniform(m.w.data() + pv.b1, kHidden1, bound1);
    fill_uniform(m.w.data() + pv.w2, static_cast<std::int64_t>(kHidden1) * kHidden2, bound2);
    fill_uniform(m.w.data() + pv.b2, kHidden2, bound2);
    fill_uniform(m.w.data() + pv.w3, static_cast<std::int64_t>(kHidden2) * num_classes, bound3);
    fill_uniform(m.w.data() + pv.b3, num_classes, bound3);
    return m;
}

namespace detail {

struct ForwardCache {
    Eigen::MatrixXd h1_pre, h1, h2_pre, h2, probs;
    double loss = 0.0;
};

/// Forward pass over a batch given as one-hot column indices. Fills softmax
/// probabilities and, when labels are provided, the mean cross-entropy.
inline void forward(const ModelParams& m, const std::vector<ProcessedSample>& batch,
                    ForwardCache& fc, bool with_loss) {
    const int c = m.num_classes;
    const int nb = static_cast<int>(batch.size());
    const ParamOffsets pv(c);

    Eigen::Map<const Eigen::MatrixXd> w1(m.w.data(), kHidden1, c);
    Eigen::Map<const Eigen::VectorXd> b1(m.w.data() + pv.b1, kHidden1);
    Eigen::Map<const Eigen::MatrixXd> w2(m.w.data() + pv.w2, kHidden2, kHidden1);
    Eigen::Map<const Eigen::VectorXd> b2(m.w.data() + pv.b2, kHidden2);
    Eigen::Map<const Eigen::MatrixXd> w3(m.w.data() + pv.w3, c, kHidden2);
    Eigen::Map<const Eigen::VectorXd> b3(m.w.data() + pv.b3, c);

    fc.h1_pre.resize(kHidden1, nb);
    for (int i = 0; i < nb; ++i)
        fc.h1_pre.col(i) = w1.col(batch[i].prev_item) + b1;
    fc.h1 = fc.h1_pre.cwiseMax(0.0);

    fc.h2_pre.noalias() = w2 * fc.h1;
    fc.h2_pre.colwise() += b2;
    fc.h2 = fc.h2_pre.cwiseMax(0.0);

    fc.probs.noalias() = w3 * fc.h2;
    fc.probs.colwise() += b3;

    double loss = 0.0;
    for (int i = 0; i < nb; ++i) {
        auto col = fc.probs.col(i);
        const double zmax = col.maxCoeff();
        col = (col.array() - zmax).exp();
        const double denom = col.sum();
        if (with_loss) loss -= std::log(col(batch[i].next_item) / denom);
        col /= denom;
    }
    fc.loss = with_loss ? loss / nb : 0.0;
}

}  // namespace detail

/// Mean cross-entropy over the batch together with its gradient with respect
/// to every parameter, in the flat layout of ModelParams.
inline std::pair<double, Eigen::VectorXd> loss_and_grad(
    const ModelParams& m, const std::vector<ProcessedSample>& batch) {
    require(!batch.empty(), "loss_and_grad: empty batch");
    const int c = m.num_classes;
    const int nb = static_cast<int>(batch.size());

    detail::ForwardCache fc;
    detail::forward(m, batch, fc, true);

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.w.size());
    const detail::ParamOffsets pv(c);
    Eigen::Map<Eigen::MatrixXd> gw1(grad.data(), kHidden1, c);
    Eigen::Map<Eigen::VectorXd> gb1(grad.data() + pv.b1, kHidden1);
    Eigen::Map<Eigen::MatrixXd> gw2(grad.data() + pv.w2, kHidden2, kHidden1);
    Eigen::Map<Eigen::VectorXd> gb2(grad.data() + pv.b2, kHidden2);
    Eigen::Map<Eigen::MatrixXd> gw3(grad.data() + pv.w3, c, kHidden2);
    Eigen::Map<Eigen::VectorXd> gb3(grad.data() + pv.b3, c);

    Eigen::Map<const Eigen::MatrixXd> w2(m.w.data() + pv.w2, kHidden2, kHidden1);
    Eigen::Map<const Eigen::MatrixXd> w3(m.w.data() + pv.w3, c, kHidden2);

    // dZ = (softmax - onehot) / nb
    Eigen::MatrixXd dz = fc.probs;
    for (int i = 0; i < nb; ++i) dz(batch[i].next_item, i) -= 1.0;
    dz /= static_cast<double>(nb);

    gw3.noalias() = dz * fc.h2.transpose();
    gb3 = dz.rowwise().sum();

    Eigen::MatrixXd dh2 = w3.transpose() * dz;
    dh2 = (fc.h2_pre.array() > 0.0).select(dh2, 0.0);

    gw2.noalias() = dh2 * fc.h1.transpose();
    gb2 = dh2.rowwise().sum();

    Eigen::MatrixXd dh1 = w2.transpose() * dh2;
    dh1 = (fc.h1_pre.array() > 0.0).select(dh1, 0.0);

    for (int i = 0; i < nb; ++i) gw1.col(batch[i].prev_item) += dh1.col(i);
    gb1 = dh1.rowwise().sum();

    return {fc.loss, std::move(grad)};
}

/// Mean cross-entropy only (no gradient), for loss tracking on fixed data.
inline double batch_loss(const ModelParams& m, const std::vector<ProcessedSample>& batch) {
    require(!batch.empty(), "batch_loss: empty batch");
    detail::ForwardCache fc;
    detail::forward(m, batch, fc, true);
    return fc.loss;
}

struct LocalSgdResult {
    ModelParams model_out;
    Eigen::VectorXd accumulator;          // sum of the applied per-round gradients
    std::vector<double> sq_grad_norms;    // ||g(w^l)||^2 per local round
    int steps_taken = 0;
};

/// L rounds of mini-batch SGD. One round draws `minibatches` batches of
/// `batch_size` samples with replacement, averages their gradients into a
/// single direction, and applies one step of size eta. The accumulator is
/// the exact sum of applied directions, so
///   model_out = model_in - eta * accumulator
/// holds to rounding.
inline LocalSgdResult local_sgd(const ModelParams& model_in,
                                const std::vector<ProcessedSample>& dataset,
                                int local_rounds, double eta, int minibatches,
                                int batch_size, std::mt19937_64& rng) {
    require(local_rounds >= 1, "local_sgd: local rounds must be >= 1");
    require(!dataset.empty(), "local_sgd: empty dataset");
    require(minibatches >= 1 && batch_size >= 1, "local_sgd: invalid batch shape");

    LocalSgdResult res;
    res.model_out = model_in;
    res.accumulator = Eigen::VectorXd::Zero(model_in.w.size());
    res.sq_grad_norms.reserve(local_rounds);

    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    std::vector<ProcessedSample> batch(batch_size);
    Eigen::VectorXd round_grad(model_in.w.size());

    for (int l = 0; l < local_rounds; ++l) {
        round_grad.setZero();
        for (int b = 0; b < minibatches; ++b) {
            for (int i = 0; i < batch_size; ++i) batch[i] = dataset[pick(rng)];
            auto [loss, grad] = loss_and_grad(res.model_out, batch);
            (void)loss;
            round_grad += grad;
        }
        round_grad /= static_cast<double>(minibatches);
        res.sq_grad_norms.push_back(round_grad.squaredNorm());
        res.model_out.w -= eta * round_grad;
        res.accumulator += round_grad;
        ++res.steps_taken;
    }
    return res;
}

/// Fraction of samples whose label ranks inside the top M logits. A label
/// beaten by r logits (ties counting only lower class ids) is ranked r and
/// counted as correct when r < M.
inline double top_m_accuracy(const ModelParams& m,
                             const std::vector<ProcessedSample>& dataset, int top_m) {
    require(top_m >= 1, "top_m_accuracy: M must be >= 1");
    require(!dataset.empty(), "top_m_accuracy: empty dataset");

    const int chunk = 512;
    int correct = 0;
    detail::ForwardCache fc;
    std::vector<ProcessedSample> part;
    for (std::size_t start = 0; start < dataset.size(); start += chunk) {
        const std::size_t end = std::min(dataset.size(), start + chunk);
        part.assign(dataset.begin() + start, dataset.begin() + end);
        detail::forward(m, part, fc, false);
        for (std::size_t i = 0; i < part.size(); ++i) {
            const auto col = fc.probs.col(static_cast<int>(i));
            const int y = part[i].next_item;
            const double py = col(y);
            int rank = 0;
            for (int ccls = 0; ccls < m.num_classes; ++ccls) {
                if (col(ccls) > py || (col(ccls) == py && ccls < y)) ++rank;
            }
            if (rank < top_m) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

/// Checkpoint layout: "HFLW" magic, then num_classes, hidden sizes, and the
/// round index as little-endian uint32, then d parameters as float32.
inline void save_checkpoint(const std::string& path, const ModelParams& m,
                            std::uint32_t round_index) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, "save_checkpoint: cannot open " + path);
    const char magic[4] = {'H', 'F', 'L', 'W'};
    std::uint32_t header[4] = {static_cast<std::uint32_t>(m.num_classes), kHidden1,
                               kHidden2, round_index};
    std::fwrite(magic, 1, 4, f);
    std::fwrite(header, sizeof(std::uint32_t), 4, f);
    std::vector<float> buf(m.w.size());
    for (Eigen::Index i = 0; i < m.w.size(); ++i) buf[i] = static_cast<float>(m.w(i));
    std::fwrite(buf.data(), sizeof(float), buf.size(), f);
    std::fclose(f);
}

inline std::pair<ModelParams, std::uint32_t> load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    require(f != nullptr, "load_checkpoint: cannot open " + path);
    char magic[4];
    std::uint32_t header[4];
    bool ok = std::fread(magic, 1, 4, f) == 4 &&
              std::fread(header, sizeof(std::uint32_t), 4, f) == 4 &&
              magic[0] == 'H' && magic[1] == 'F' && magic[2] == 'L' && magic[3] == 'W' &&
              header[1] == kHidden1 && header[2] == kHidden2;
    require(ok, "load_checkpoint: bad header in " + path);
    ModelParams m;
    m.num_classes = static_cast<int>(header[0]);
    m.w.resize(model_dim(m.num_classes));
    std::vector<float> buf(m.w.size());
    ok = std::fread(buf.data(), sizeof(float), buf.size(), f) == buf.size();
    std::fclose(f);
    require(ok, "load_checkpoint: truncated file " + path);
    for (Eigen::Index i = 0; i < m.w.size(); ++i) m.w(i) = buf[i];
    return {std::move(m), header[3]};
}

}  // namespace hflsim

#endif  // HFLSIM_LEARNER_HPP
