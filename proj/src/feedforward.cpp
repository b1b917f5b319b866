#include "sqdm/feedforward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sqdm/matrix_io.hpp"

namespace sqdm {

void LineBuffer::Pass::add(double x, double v_b) {
    if (!samples.empty()) {
        double last = samples.back().x;
        if (x < last) ascending = false;
        if (x > last) descending = false;
    }
    samples.push_back({x, v_b});
}

void LineBuffer::Pass::clear() {
    samples.clear();
    ascending = descending = true;
}

int LineBuffer::Pass::nearest(double x) const {
    const int n = static_cast<int>(samples.size());
    auto closer_of = [&](int a, int b) {
        return std::abs(samples[b].x - x) < std::abs(samples[a].x - x) ? b : a;
    };
    if (ascending || descending) {
        auto cmp_asc = [](const Sample& s, double v) { return s.x < v; };
        auto cmp_desc = [](const Sample& s, double v) { return s.x > v; };
        auto it = ascending
                      ? std::lower_bound(samples.begin(), samples.end(), x, cmp_asc)
                      : std::lower_bound(samples.begin(), samples.end(), x, cmp_desc);
        int i = static_cast<int>(it - samples.begin());
        int best = std::clamp(i, 0, n - 1);
        if (i - 1 >= 0) best = closer_of(best, i - 1);
        return best;
    }
    int best = 0;
    for (int i = 1; i < n; ++i) best = closer_of(best, i);
    return best;
}

LineBuffer::LineBuffer(int window_n) : window_n_(window_n) {
    if (window_n < 1)
        throw std::invalid_argument("LineBuffer: window length must be >= 1");
}

void LineBuffer::record(double x, double v_b_total, ScanDirection dir) {
    (dir == ScanDirection::Forward ? curr_fwd_ : curr_bwd_).add(x, v_b_total);
}

void LineBuffer::advance_line() {
    if (curr_fwd_.samples.empty() && curr_bwd_.samples.empty())
        throw std::logic_error("LineBuffer: advancing with an empty current line");
    prev_fwd_ = std::move(curr_fwd_);
    prev_bwd_ = std::move(curr_bwd_);
    curr_fwd_.clear();
    curr_bwd_.clear();
    ++line_index_;
}

void LineBuffer::enable(double baseline) {
    if (line_index_ < 1)
        throw std::logic_error("LineBuffer: enable requires a completed line");
    enabled_ = true;
    baseline_ = baseline;
}

void LineBuffer::dump(const std::string& prefix) const {
    auto write_pass = [](const Pass& pass, const std::string& path) {
        if (pass.samples.empty()) return;
        Grid m(2, static_cast<int>(pass.samples.size()));
        for (int i = 0; i < m.height; ++i) {
            m.at(0, i) = pass.samples[i].x;
            m.at(1, i) = pass.samples[i].v_b;
        }
        write_matrix(path, m);
    };
    write_pass(prev_fwd_, prefix + "_fwd.txt");
    write_pass(prev_bwd_, prefix + "_bwd.txt");
}

double LineBuffer::query(double x, ScanDirection dir) const {
    if (!enabled_) return 0.0;
    const Pass& matching = dir == ScanDirection::Forward ? prev_fwd_ : prev_bwd_;
    const Pass& fallback = dir == ScanDirection::Forward ? prev_bwd_ : prev_fwd_;
    const Pass& pass = matching.samples.empty() ? fallback : matching;
    const auto& samples = pass.samples;
    if (samples.empty()) return 0.0;

    const int n = static_cast<int>(samples.size());
    int nearest = pass.nearest(x);
    int win = std::min(window_n_, n);
    int lo = std::clamp(nearest - (win - 1) / 2, 0, n - win);
    double sum = 0.0;
    for (int i = lo; i < lo + win; ++i) sum += samples[i].v_b;
    return sum / win - baseline_;
}

} // namespace sqdm
