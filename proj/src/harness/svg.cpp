#include "attnflow/svg.hpp"

#include <cstdio>
#include <sstream>

namespace attnflow
{
    namespace
    {
        std::string num(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", v);
            std::string s = buf;
            return s == "-0.000" ? "0.000" : s;
        }

        std::string attributes(const Style& style)
        {
            std::string out = " stroke=\"" + style.stroke + "\" fill=\"" + style.fill + "\" stroke-width=\""
                              + num(style.width) + "\"";
            if (style.opacity < 1.0)
            {
                out += " opacity=\"" + num(style.opacity) + "\"";
            }
            return out;
        }

        std::string points_attr(const std::vector<Point2>& points)
        {
            std::string out;
            for (const auto& [x, y] : points)
            {
                if (!out.empty())
                {
                    out += ' ';
                }
                out += num(x) + "," + num(y);
            }
            return out;
        }

        std::string escape(const std::string& text)
        {
            std::string out;
            for (const char c : text)
            {
                switch (c)
                {
                    case '<':
                        out += "&lt;";
                        break;
                    case '>':
                        out += "&gt;";
                        break;
                    case '&':
                        out += "&amp;";
                        break;
                    default:
                        out += c;
                }
            }
            return out;
        }
    }

    SvgDocument::SvgDocument(double width, double height)
        : width_(width)
        , height_(height)
    {
    }

    void SvgDocument::line(Point2 a, Point2 b, const Style& style)
    {
        elements_.push_back("<line x1=\"" + num(a.first) + "\" y1=\"" + num(a.second) + "\" x2=\"" + num(b.first)
                            + "\" y2=\"" + num(b.second) + "\"" + attributes(style) + "/>");
    }

    void SvgDocument::polyline(const std::vector<Point2>& points, const Style& style)
    {
        if (points.size() < 2)
        {
            return;
        }
        elements_.push_back("<polyline points=\"" + points_attr(points) + "\"" + attributes(style) + "/>");
    }

    void SvgDocument::polygon(const std::vector<Point2>& points, const Style& style)
    {
        elements_.push_back("<polygon points=\"" + points_attr(points) + "\"" + attributes(style) + "/>");
    }

    void SvgDocument::circle(Point2 center, double radius, const Style& style)
    {
        elements_.push_back("<circle cx=\"" + num(center.first) + "\" cy=\"" + num(center.second) + "\" r=\""
                            + num(radius) + "\"" + attributes(style) + "/>");
    }

    void SvgDocument::text(Point2 at, const std::string& content, double size, const std::string& anchor)
    {
        elements_.push_back("<text x=\"" + num(at.first) + "\" y=\"" + num(at.second) + "\" font-size=\"" + num(size)
                            + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(content)
                            + "</text>");
    }

    std::string SvgDocument::str() const
    {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\"" << num(height_)
            << "\" viewBox=\"0 0 " << num(width_) << " " << num(height_) << "\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        for (const auto& e : elements_)
        {
            out << e << "\n";
        }
        out << "</svg>\n";
        return out.str();
    }

    Point2 PlotFrame::map(double x, double y) const
    {
        const double u = (x - x_min) / (x_max - x_min);
        const double v = (y - y_min) / (y_max - y_min);
        return {left + u * width, top + (1.0 - v) * height};
    }

    void draw_axes(SvgDocument& doc, const PlotFrame& frame, const std::string& x_label, const std::string& y_label,
                   int ticks)
    {
        const Style axis{"black", "none", 1.0, 1.0};
        const Style grid{"#dddddd", "none", 0.5, 1.0};
        doc.polygon({{frame.left, frame.top},
                     {frame.left + frame.width, frame.top},
                     {frame.left + frame.width, frame.top + frame.height},
                     {frame.left, frame.top + frame.height}},
                    axis);
        for (int i = 0; i <= ticks; ++i)
        {
            const double fx = frame.x_min + (frame.x_max - frame.x_min) * i / ticks;
            const double fy = frame.y_min + (frame.y_max - frame.y_min) * i / ticks;
            const Point2 px = frame.map(fx, frame.y_min);
            const Point2 py = frame.map(frame.x_min, fy);
            doc.line({px.first, frame.top}, {px.first, frame.top + frame.height}, grid);
            doc.line({frame.left, py.second}, {frame.left + frame.width, py.second}, grid);
            std::ostringstream lx;
            lx << fx;
            std::ostringstream ly;
            ly << fy;
            doc.text({px.first, frame.top + frame.height + 14.0}, lx.str(), 10.0, "middle");
            doc.text({frame.left - 4.0, py.second + 3.0}, ly.str(), 10.0, "end");
        }
        doc.text({frame.left + frame.width / 2.0, frame.top + frame.height + 30.0}, x_label, 12.0, "middle");
        doc.text({frame.left - 40.0, frame.top - 8.0}, y_label, 12.0, "start");
    }
}
