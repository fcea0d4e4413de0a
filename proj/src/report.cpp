#include "otgdl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "otgdl/io_util.hpp"

namespace otgdl {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
    std::istringstream is(read_text(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) row.push_back(field);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> smooth(const std::vector<double>& y, int window) {
    std::vector<double> out(y.size());
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        acc += y[i];
        ++count;
        if (count > static_cast<std::size_t>(window)) {
            acc -= y[i - window];
            --count;
        }
        out[i] = acc / static_cast<double>(count);
    }
    return out;
}

} // namespace

std::string render_line_chart(const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<SvgSeries>& series,
                              int width, int height) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    const int ml = 70, mr = 20, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto X = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto Y = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"" << height - 12 << "\">" << fmt_tick(xmin) << "</text>\n";
    os << "<text x=\"" << ml + pw << "\" y=\"" << height - 12 << "\" text-anchor=\"end\">"
       << fmt_tick(xmax) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + ph << "\" text-anchor=\"end\">" << fmt_tick(ymin)
       << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\">" << fmt_tick(ymax)
       << "</text>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
       << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" transform=\"rotate(-90 16 " << mt + ph / 2
       << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            os << X(series[s].x[i]) << "," << Y(series[s].y[i]) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << ml + pw - 6 << "\" y=\"" << mt + 14 + 16 * s
           << "\" text-anchor=\"end\" fill=\"" << color << "\">" << series[s].label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_line_svg(const std::filesystem::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<SvgSeries>& series) {
    write_text_atomic(path, render_line_chart(title, xlabel, ylabel, series));
}

void emit_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ostringstream aggregate;
    aggregate << "source,series,x,y\n";
    bool wrote_anything = false;

    const auto pretrain_csv = run_dir / "pretrain_trace.csv";
    if (std::filesystem::exists(pretrain_csv)) {
        auto rows = read_csv_rows(pretrain_csv);
        SvgSeries tr{"train", {}, {}}, va{"val", {}, {}};
        for (std::size_t i = 1; i < rows.size(); ++i) {
            tr.x.push_back(std::stod(rows[i][0]));
            tr.y.push_back(std::stod(rows[i][1]));
            va.x.push_back(std::stod(rows[i][0]));
            va.y.push_back(std::stod(rows[i][2]));
            aggregate << "pretrain,train," << rows[i][0] << "," << rows[i][1] << "\n";
            aggregate << "pretrain,val," << rows[i][0] << "," << rows[i][2] << "\n";
        }
        write_line_svg(out_dir / "pretrain_loss.svg", "FUGW loss", "epoch", "loss", {tr, va});
        wrote_anything = true;
    }

    const auto train_csv = run_dir / "train_trace.csv";
    if (std::filesystem::exists(train_csv)) {
        auto rows = read_csv_rows(train_csv);
        SvgSeries raw{"loss", {}, {}};
        for (std::size_t i = 1; i < rows.size(); ++i) {
            raw.x.push_back(std::stod(rows[i][0]));
            raw.y.push_back(std::stod(rows[i][3]));
        }
        SvgSeries sm{"smoothed (w=50)", raw.x, smooth(raw.y, 50)};
        for (std::size_t i = 0; i < raw.x.size(); ++i)
            aggregate << "train,smoothed," << raw.x[i] << "," << sm.y[i] << "\n";
        write_line_svg(out_dir / "train_loss.svg", "dictionary loss", "step", "loss", {raw, sm});
        wrote_anything = true;
    }

    std::vector<SvgSeries> acc_series;
    for (const char* probe : {"contrast", "subject"}) {
        const auto probe_csv = run_dir / (std::string("probe_") + probe + ".csv");
        if (!std::filesystem::exists(probe_csv)) continue;
        auto rows = read_csv_rows(probe_csv);
        SvgSeries s{probe, {}, {}};
        for (std::size_t i = 1; i < rows.size(); ++i) {
            s.x.push_back(std::stod(rows[i][1]));
            s.y.push_back(std::stod(rows[i][2]));
            aggregate << "probe," << probe << "," << rows[i][1] << "," << rows[i][2] << "\n";
        }
        acc_series.push_back(std::move(s));
    }
    if (!acc_series.empty()) {
        write_line_svg(out_dir / "accuracy_vs_alpha.svg", "probe accuracy", "alpha", "accuracy",
                       acc_series);
        wrote_anything = true;
    }

    require(wrote_anything, "IoError",
            "no trace or probe CSVs found under " + run_dir.string());
    write_text_atomic(out_dir / "report.csv", aggregate.str());
}

} // namespace otgdl
