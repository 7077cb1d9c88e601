#include "pcmlab/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pcmlab/config.hpp"

namespace pcmlab {

namespace {

const char* kClassColors[] = {"#3366cc", "#dc3912", "#109618", "#990099",
                              "#ff9900", "#0099c6", "#dd4477", "#66aa00"};

const char* class_color(int cls) {
    if (cls < 0) return "#888888";
    return kClassColors[cls % 8];
}

}  // namespace

std::string render_loss_csv(const std::vector<LossRow>& rows) {
    std::ostringstream out;
    out << "step,l_pcm,l_adv_gen,l_adv_disc,grad_norm\n";
    for (const LossRow& r : rows)
        out << r.step << ',' << format_double(r.l_pcm) << ',' << format_double(r.l_adv_gen) << ','
            << format_double(r.l_adv_disc) << ',' << format_double(r.grad_norm) << '\n';
    return out.str();
}

std::string render_samples_csv(const SampleRun& run, uint64_t seed) {
    std::ostringstream out;
    out << "index,x,y,class,seed\n";
    for (size_t i = 0; i < run.points.size(); ++i)
        out << i << ',' << format_double(run.points[i].x) << ',' << format_double(run.points[i].y)
            << ',' << run.classes[i] << ',' << seed << '\n';
    return out.str();
}

std::string render_scatter_svg(const SampleRun& run) {
    double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 1.0;
    if (!run.points.empty()) {
        lo_x = hi_x = run.points.front().x;
        lo_y = hi_y = run.points.front().y;
        for (const Vec2& p : run.points) {
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
    }
    double span_x = hi_x - lo_x, span_y = hi_y - lo_y;
    if (span_x <= 0.0) span_x = 1.0;
    if (span_y <= 0.0) span_y = 1.0;
    lo_x -= 0.1 * span_x;
    hi_x += 0.1 * span_x;
    lo_y -= 0.1 * span_y;
    hi_y += 0.1 * span_y;
    const double sx = 640.0 / (hi_x - lo_x);
    const double sy = 640.0 / (hi_y - lo_y);
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
           "viewBox=\"0 0 640 640\">\n";
    out << "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
    for (size_t i = 0; i < run.points.size(); ++i) {
        const double cx = (run.points[i].x - lo_x) * sx;
        const double cy = 640.0 - (run.points[i].y - lo_y) * sy; // y grows upward
        out << "<circle cx=\"" << format_double(cx) << "\" cy=\"" << format_double(cy)
            << "\" r=\"2\" fill=\"" << class_color(run.classes[i]) << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
    write_text_file(path, render_loss_csv(rows));
}

void write_samples_csv(const std::string& path, const SampleRun& run, uint64_t seed) {
    write_text_file(path, render_samples_csv(run, seed));
}

void write_scatter_svg(const std::string& path, const SampleRun& run) {
    write_text_file(path, render_scatter_svg(run));
}

}  // namespace pcmlab
