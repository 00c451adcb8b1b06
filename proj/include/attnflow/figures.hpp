#pragma once

// Regenerates the data behind the atlas, evolution and consumption figures
// and renders them as SVG.

#include "attnflow/io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace attnflow
{
    struct FigureOptions
    {
        std::string out_dir = "figures";
        int trials = 200;          // fig3 only
        std::uint64_t seed = 1;    // fig1*, fig2
        bool data_only = false;    // skip the SVG
        int jobs = 1;
    };

    /// fig1a .. fig1e, fig2, fig3.
    const std::vector<std::string>& figure_ids();
    bool is_figure(const std::string& id);

    /// Writes out_dir/<id>/{data files, <id>.svg, summary.json, manifest.json}
    /// and returns the summary. Throws std::invalid_argument for unknown ids.
    json make_figure(const std::string& id, const FigureOptions& options);
}
