#ifndef SQDM_FEEDFORWARD_HPP
#define SQDM_FEEDFORWARD_HPP

#include <string>
#include <vector>

#include "sqdm/plant.hpp"

namespace sqdm {

/// Previous-line feedforward buffer. The bias applied while scanning a line
/// is recorded against its x position; on the next line the sample nearest
/// to the current x is looked up, mean-filtered over a window of n samples,
/// and replayed relative to the feedback level captured when the
/// feedforward was enabled. Queries match the scan direction of the pass
/// they came from, so back-and-forth lines replay like against like and a
/// varying scan speed only changes the sample density, not the lookup.
class LineBuffer {
  public:
    explicit LineBuffer(int window_n = 5);

    struct Sample {
        double x;
        double v_b;
    };

    /// Append the dither-free bias (feedback + feedforward) applied at x.
    void record(double x, double v_b_total, ScanDirection dir);

    /// Finish the current line: it becomes the reference for the next one.
    /// Throws std::logic_error when nothing was recorded.
    void advance_line();

    /// Mean of the n samples around the nearest previous-line x, minus the
    /// baseline. Returns exactly 0 while disabled.
    double query(double x, ScanDirection dir) const;

    /// Arm the feedforward; `baseline` is the feedback output at this moment
    /// so the replayed values are deltas, not absolute levels. Requires at
    /// least one completed line.
    void enable(double baseline);
    void disable() { enabled_ = false; }

    bool enabled() const { return enabled_; }
    int line_index() const { return line_index_; }
    int window() const { return window_n_; }
    double baseline() const { return baseline_; }
    const std::vector<Sample>& previous(ScanDirection dir) const {
        return (dir == ScanDirection::Forward ? prev_fwd_ : prev_bwd_).samples;
    }

    /// Debug export: previous-line passes as two-column (x, v_b) matrix
    /// text files `<prefix>_fwd.txt` / `<prefix>_bwd.txt`. Empty passes are
    /// skipped.
    void dump(const std::string& prefix) const;

  private:
    struct Pass {
        std::vector<Sample> samples;
        bool ascending = true;
        bool descending = true;

        void add(double x, double v_b);
        void clear();
        int nearest(double x) const;
    };

    int window_n_;
    Pass curr_fwd_, curr_bwd_;
    Pass prev_fwd_, prev_bwd_;
    int line_index_ = 0;
    bool enabled_ = false;
    double baseline_ = 0.0;
};

} // namespace sqdm

#endif
