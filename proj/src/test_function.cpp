#include "opplab/test_function.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

namespace opplab {

double smooth_step(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    const double a = std::exp(-1 / u), b = std::exp(-1 / (1 - u));
    return a / (a + b);
}

double Factor::operator()(double x) const {
    if (x < lo || x > hi) return 0;
    if (taper == 0) return 1;
    return smooth_step((x - lo) / taper) * smooth_step((hi - x) / taper);
}

TestFunction TestFunction::zero() { return TestFunction(); }

TestFunction TestFunction::ball(double radius, double amplitude) {
    if (!(radius > 0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
    TestFunction f;
    f.kind_ = Kind::Ball;
    f.radius_ = radius;
    f.amplitude_ = amplitude;
    return f;
}

TestFunction TestFunction::product(const Factor& x, const Factor& y, const Factor& z, double amplitude) {
    for (const Factor& c : {x, y, z}) {
        if (!(c.lo < c.hi) || !(c.taper >= 0) || 2 * c.taper > c.hi - c.lo)
            throw Error(ErrorKind::InvalidArgument, "factor needs lo < hi and 0 <= 2 taper <= hi - lo");
    }
    TestFunction f;
    f.kind_ = Kind::Product;
    f.factors_ = {x, y, z};
    f.amplitude_ = amplitude;
    return f;
}

TestFunction TestFunction::box(double h) {
    const Factor c{-h, h, 0};
    return product(c, c, c);
}

double TestFunction::operator()(const Vec3& v) const {
    if (amplitude_ == 0) return 0;
    if (kind_ == Kind::Ball) return v.squaredNorm() <= radius_ * radius_ ? amplitude_ : 0;
    const double a = factors_[0](v[0]);
    if (a == 0) return 0;
    const double b = factors_[1](v[1]);
    if (b == 0) return 0;
    return amplitude_ * a * b * factors_[2](v[2]);
}

double TestFunction::support_radius() const {
    if (amplitude_ == 0) return 0;
    if (kind_ == Kind::Ball) return radius_;
    double s = 0;
    for (const Factor& c : factors_) {
        const double m = std::max(std::abs(c.lo), std::abs(c.hi));
        s += m * m;
    }
    return std::sqrt(s);
}

double TestFunction::lipschitz() const {
    if (amplitude_ == 0) return 0;
    if (kind_ == Kind::Ball) return std::numeric_limits<double>::infinity();
    double s = 0;
    for (const Factor& c : factors_) {
        if (c.taper == 0) return std::numeric_limits<double>::infinity();
        const double slope = 2 / c.taper;
        s += slope * slope;
    }
    return std::abs(amplitude_) * std::sqrt(s);
}

namespace {

double parse_number(const std::string& s) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size() || !std::isfinite(x))
        throw Error(ErrorKind::InvalidArgument, "bad number '" + s + "' in test function");
    return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

TestFunction TestFunction::parse(const std::string& text) {
    if (text == "zero") return zero();
    std::string body = text;
    double amp = 1;
    if (const auto star = body.find('*'); star != std::string::npos) {
        amp = parse_number(body.substr(star + 1));
        body = body.substr(0, star);
    }
    if (body.rfind("ball:", 0) == 0) return ball(parse_number(body.substr(5)), amp);
    if (body.rfind("bump:", 0) == 0) {
        const auto parts = split(body.substr(5), ';');
        if (parts.size() != 3) throw Error(ErrorKind::InvalidArgument, "bump needs three factors");
        std::array<Factor, 3> fs;
        for (int i = 0; i < 3; ++i) {
            const auto nums = split(parts[i], ',');
            if (nums.size() != 3) throw Error(ErrorKind::InvalidArgument, "factor needs lo,hi,taper");
            fs[i] = {parse_number(nums[0]), parse_number(nums[1]), parse_number(nums[2])};
        }
        return product(fs[0], fs[1], fs[2], amp);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown test function '" + text + "'");
}

std::string TestFunction::describe() const {
    if (amplitude_ == 0) return "zero";
    char buf[256];
    std::string s;
    if (kind_ == Kind::Ball) {
        std::snprintf(buf, sizeof buf, "ball:%.17g", radius_);
        s = buf;
    } else {
        s = "bump:";
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof buf, "%s%.17g,%.17g,%.17g", i ? ";" : "", factors_[i].lo, factors_[i].hi,
                          factors_[i].taper);
            s += buf;
        }
    }
    if (amplitude_ != 1) {
        std::snprintf(buf, sizeof buf, "*%.17g", amplitude_);
        s += buf;
    }
    return s;
}

}  // namespace opplab
