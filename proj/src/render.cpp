#include "elevnav/render.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

namespace elevnav {

namespace {

constexpr double kScale = 40.0;  // pixels per metre
constexpr double kMargin = 1.0;  // metres around the scene

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

class Canvas {
public:
    Canvas(double x_min, double x_max, double y_min, double y_max)
        : x_min_(x_min), y_max_(y_max), width_((x_max - x_min) * kScale), height_((y_max - y_min) * kScale) {}

    std::string x(double wx) const { return fmt((wx - x_min_) * kScale); }
    std::string y(double wy) const { return fmt((y_max_ - wy) * kScale); }
    std::string len(double w) const { return fmt(w * kScale); }
    double width() const { return width_; }
    double height() const { return height_; }

    std::string line(const Vec2& a, const Vec2& b, const std::string& style) const {
        return "  <line x1=\"" + x(a.x) + "\" y1=\"" + y(a.y) + "\" x2=\"" + x(b.x) + "\" y2=\"" + y(b.y) + "\" " +
               style + "/>\n";
    }
    std::string circle(const Vec2& c, double r, const std::string& style) const {
        return "  <circle cx=\"" + x(c.x) + "\" cy=\"" + y(c.y) + "\" r=\"" + len(r) + "\" " + style + "/>\n";
    }

private:
    double x_min_;
    double y_max_;
    double width_;
    double height_;
};

}  // namespace

std::string render_svg(const EpisodeTrace& trace) {
    const TraceGeometry& g = trace.header.world;
    const double hw = g.cell_width / 2.0;
    const double hd = g.door_width / 2.0;

    double y_min = -g.robot_radius;
    auto widen = [&](const Vec2& p) { y_min = std::min(y_min, p.y - g.robot_radius); };
    for (const auto& s : trace.steps) widen(s.robot.pos);
    widen(trace.footer.robot.pos);
    double x_lo = -hw, x_hi = hw;
    for (const auto& s : trace.steps) {
        x_lo = std::min(x_lo, s.robot.pos.x - g.robot_radius);
        x_hi = std::max(x_hi, s.robot.pos.x + g.robot_radius);
    }
    const Canvas c(x_lo - kMargin, x_hi + kMargin, y_min - kMargin, g.cell_depth + kMargin);

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(c.width()) + "\" height=\"" +
           fmt(c.height()) + "\" viewBox=\"0 0 " + fmt(c.width()) + " " + fmt(c.height()) + "\">\n";
    out += "  <rect x=\"0\" y=\"0\" width=\"" + fmt(c.width()) + "\" height=\"" + fmt(c.height()) +
           "\" fill=\"white\"/>\n";

    const std::string wall = "stroke=\"black\" stroke-width=\"4\"";
    out += c.line({-hw, 0.0}, {-hd, 0.0}, wall);
    out += c.line({hd, 0.0}, {hw, 0.0}, wall);
    out += c.line({hw, 0.0}, {hw, g.cell_depth}, wall);
    out += c.line({hw, g.cell_depth}, {-hw, g.cell_depth}, wall);
    out += c.line({-hw, g.cell_depth}, {-hw, 0.0}, wall);
    out += c.line({-hd, 0.0}, {hd, 0.0}, "stroke=\"gray\" stroke-width=\"1\" stroke-dasharray=\"6 4\"");

    // Humans where they started (faint) and where they ended.
    if (!trace.steps.empty())
        for (const auto& h : trace.steps.front().humans)
            out += c.circle(h.pos, g.agent_radius, "fill=\"none\" stroke=\"steelblue\" stroke-dasharray=\"4 3\"");
    for (const auto& h : trace.footer.humans)
        out += c.circle(h.pos, g.agent_radius, "fill=\"lightsteelblue\" stroke=\"steelblue\" fill-opacity=\"0.8\"");

    std::string points;
    for (const auto& s : trace.steps) points += c.x(s.robot.pos.x) + "," + c.y(s.robot.pos.y) + " ";
    points += c.x(trace.footer.robot.pos.x) + "," + c.y(trace.footer.robot.pos.y);
    out += "  <polyline points=\"" + points + "\" fill=\"none\" stroke=\"darkorange\" stroke-width=\"2\"/>\n";

    out += c.circle(trace.footer.robot.pos, g.robot_radius, "fill=\"gold\" stroke=\"darkorange\" fill-opacity=\"0.9\"");

    for (const auto& s : trace.steps)
        if (s.beep) out += c.circle(s.robot.pos, 0.2, "fill=\"none\" stroke=\"red\" stroke-width=\"2\"");

    out += "</svg>\n";
    return out;
}

void write_svg(const std::filesystem::path& path, const EpisodeTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << render_svg(trace);
    if (!out) throw InvalidArgument("failed writing " + path.string());
}

}  // namespace elevnav
