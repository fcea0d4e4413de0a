#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace otgdl {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// minimal dependency-free line chart; reports are valid without the SVGs
std::string render_line_chart(const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<SvgSeries>& series,
                              int width = 720, int height = 440);

void write_line_svg(const std::filesystem::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<SvgSeries>& series);

// Aggregates whatever a run directory contains: training/pretraining loss
// curves (with a window-50 smoothed series) and accuracy-vs-alpha curves from
// probe reports. Emits report.csv plus SVG charts into out_dir.
void emit_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

} // namespace otgdl
