#include "pg/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pg {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (lr0 <= 0.0) throw std::invalid_argument("lr0 must be > 0");
    if (decay <= 0.0 || decay > 1.0) throw std::invalid_argument("decay must be in (0,1]");
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
    if (epoch >= cfg.epochs) throw std::out_of_range("epoch index beyond configured epoch count");
    return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch));
}

void AdamOptimizer::step(ParamRegistry& reg, double lr) {
    const auto& params = reg.params();
    if (states_.empty()) {
        states_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            states_[i].m.assign(params[i]->size(), 0.0);
            states_[i].v.assign(params[i]->size(), 0.0);
        }
    }
    if (states_.size() != params.size())
        throw std::logic_error("optimizer state does not match registry");
    ++t_;
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        State& s = states_[i];
        if (s.m.size() != p.size()) throw std::logic_error("optimizer state shape mismatch for " + p.name);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double g = p.grad[j];
            s.m[j] = b1 * s.m[j] + (1.0 - b1) * g;
            s.v[j] = b2 * s.v[j] + (1.0 - b2) * g * g;
            const double mhat = s.m[j] / bc1;
            const double vhat = s.v[j] / bc2;
            p.value[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
        }
    }
}

EvalReport report_from_confusion(std::vector<std::size_t> confusion, std::size_t num_classes) {
    if (confusion.size() != num_classes * num_classes)
        throw std::invalid_argument("confusion matrix size mismatch");
    EvalReport r;
    r.num_classes = num_classes;
    r.confusion = std::move(confusion);
    std::size_t total = 0, diag = 0;
    for (std::size_t t = 0; t < num_classes; ++t)
        for (std::size_t p = 0; p < num_classes; ++p) {
            total += r.at(t, p);
            if (t == p) diag += r.at(t, p);
        }
    if (total == 0) throw std::invalid_argument("empty confusion matrix");
    r.oa = static_cast<double>(diag) / static_cast<double>(total);

    r.per_class_iou.assign(num_classes, std::numeric_limits<double>::quiet_NaN());
    double iou_sum = 0.0, acc_sum = 0.0;
    std::size_t present = 0, truth_present = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t tp = r.at(c, c), fp = 0, fn = 0;
        for (std::size_t o = 0; o < num_classes; ++o) {
            if (o == c) continue;
            fp += r.at(o, c);
            fn += r.at(c, o);
        }
        if (tp + fp + fn > 0) {
            r.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
            iou_sum += r.per_class_iou[c];
            ++present;
        }
        if (tp + fn > 0) {
            acc_sum += static_cast<double>(tp) / static_cast<double>(tp + fn);
            ++truth_present;
        }
    }
    r.miou = present ? iou_sum / static_cast<double>(present) : 0.0;
    r.macc = truth_present ? acc_sum / static_cast<double>(truth_present) : 0.0;
    return r;
}

EvalReport evaluate(SegmentationNetwork& net, const std::vector<PointCloud>& dataset) {
    const std::size_t c = net.config().num_classes;
    std::vector<std::size_t> confusion(c * c, 0);
    std::mt19937_64 rng(0); // inference path draws nothing
    for (const PointCloud& cloud : dataset) {
        if (!cloud.has_labels()) throw std::invalid_argument("evaluate requires labeled clouds");
        Tape tape;
        auto fwd = net.forward(tape, cloud, /*training=*/false, rng);
        std::vector<int> pred = argmax_rows(fwd.logits);
        for (std::size_t i = 0; i < cloud.n; ++i)
            ++confusion[static_cast<std::size_t>(cloud.labels[i]) * c +
                        static_cast<std::size_t>(pred[i])];
    }
    return report_from_confusion(std::move(confusion), c);
}

std::vector<double> inverse_frequency_weights(const std::vector<PointCloud>& dataset,
                                              std::size_t num_classes) {
    std::vector<std::size_t> counts(num_classes, 0);
    std::size_t total = 0;
    for (const auto& cloud : dataset)
        for (int l : cloud.labels) {
            ++counts[static_cast<std::size_t>(l)];
            ++total;
        }
    std::vector<double> w(num_classes, 1.0);
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] > 0) {
            w[c] = static_cast<double>(total) / static_cast<double>(num_classes * counts[c]);
            sum += w[c];
            ++seen;
        }
    }
    if (seen > 0) {
        const double mean = sum / static_cast<double>(seen);
        for (std::size_t c = 0; c < num_classes; ++c)
            if (counts[c] > 0) w[c] /= mean;
    }
    return w;
}

TrainResult train(SegmentationNetwork& net, AdamOptimizer& opt,
                  const std::vector<PointCloud>& dataset, const TrainConfig& cfg,
                  const std::vector<PointCloud>* val_set, std::size_t start_epoch,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
    std::vector<double> weights;
    if (cfg.class_weighted)
        weights = inverse_frequency_weights(dataset, net.config().num_classes);

    TrainResult result;
    for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        std::mt19937_64 order_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)));
        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            std::size_t j = i + static_cast<std::size_t>(order_rng() % (order.size() - i));
            std::swap(order[i], order[j]);
        }

        double loss_sum = 0.0;
        std::size_t correct = 0, seen = 0;
        for (std::size_t step = 0; step < order.size(); ++step) {
            const PointCloud& cloud = dataset[order[step]];
            std::mt19937_64 step_rng(cfg.seed ^ (epoch * 1000003ULL + order[step] * 7919ULL + 1));
            Tape tape;
            net.registry().zero_grads();
            auto fwd = net.forward(tape, cloud, /*training=*/true, step_rng);
            Tensor loss = tape.cross_entropy(fwd.logits, cloud.labels,
                                             cfg.class_weighted ? &weights : nullptr);
            const double loss_val = loss.value()[0];
            if (!std::isfinite(loss_val))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         ", cloud " + std::to_string(order[step]));
            std::vector<int> pred = argmax_rows(fwd.logits);
            for (std::size_t i = 0; i < cloud.n; ++i)
                if (pred[i] == cloud.labels[i]) ++correct;
            seen += cloud.n;
            loss_sum += loss_val;
            tape.backward(loss);
            opt.step(net.registry(), lr);
        }

        EpochLog row;
        row.epoch = epoch;
        row.lr = lr;
        row.mean_loss = loss_sum / static_cast<double>(order.size());
        row.train_oa = static_cast<double>(correct) / static_cast<double>(seen);
        if (val_set && !val_set->empty()) {
            EvalReport rep = evaluate(net, *val_set);
            row.val_oa = rep.oa;
            row.val_miou = rep.miou;
        } else {
            row.val_oa = std::numeric_limits<double>::quiet_NaN();
            row.val_miou = std::numeric_limits<double>::quiet_NaN();
        }
        result.log.push_back(row);
        if (on_epoch) on_epoch(row);
    }
    return result;
}

std::string train_log_csv_header() {
    return "epoch,lr,mean_loss,train_oa,val_oa,val_miou";
}

std::string train_log_csv_row(const EpochLog& row) {
    std::ostringstream os;
    os.precision(17);
    os << row.epoch << "," << row.lr << "," << row.mean_loss << "," << row.train_oa << ","
       << row.val_oa << "," << row.val_miou;
    return os.str();
}

} // namespace pg
