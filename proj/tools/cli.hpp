#pragma once

// attnpipe command line: run, score, eval, synth.

#include "attnpipe/fusion.hpp"
#include "attnpipe/model.hpp"

#include <deque>
#include <iosfwd>
#include <string>

namespace attnpipe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInput = 2;

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Eight-level block sparkline of attention values on a 0..100 scale.
std::string sparkline(const std::deque<double>& values);

/// Live view of the timeline event stream.
class Renderer {
public:
    Renderer(std::ostream& out, const WindowSpec& window, bool bell, std::size_t history = 24)
        : out_(out), window_(window), bell_(bell), history_(history) {}

    void operator()(const TimelineEvent& ev);

private:
    void point(const AttentionPoint& p);
    void alert(const AlertEvent& a);

    std::ostream& out_;
    WindowSpec window_;
    bool bell_;
    std::size_t history_;
    std::deque<double> recent_;
};

} // namespace attnpipe::cli
