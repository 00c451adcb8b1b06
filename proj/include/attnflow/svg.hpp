#pragma once

// Minimal SVG document builder for the figure outputs.

#include <string>
#include <utility>
#include <vector>

namespace attnflow
{
    using Point2 = std::pair<double, double>;

    struct Style
    {
        std::string stroke = "none";
        std::string fill = "none";
        double width = 1.0;
        double opacity = 1.0;
    };

    class SvgDocument
    {
      public:
        SvgDocument(double width, double height);

        void line(Point2 a, Point2 b, const Style& style);
        void polyline(const std::vector<Point2>& points, const Style& style);
        void polygon(const std::vector<Point2>& points, const Style& style);
        void circle(Point2 center, double radius, const Style& style);
        void text(Point2 at, const std::string& content, double size = 12.0, const std::string& anchor = "start");

        /// Complete document; coordinates are printed with 3 decimals so the
        /// output is byte-stable.
        std::string str() const;

      private:
        double width_;
        double height_;
        std::vector<std::string> elements_;
    };

    /// Maps data coordinates to a pixel box with y pointing up.
    struct PlotFrame
    {
        double left = 0.0;
        double top = 0.0;
        double width = 1.0;
        double height = 1.0;
        double x_min = 0.0;
        double x_max = 1.0;
        double y_min = 0.0;
        double y_max = 1.0;

        Point2 map(double x, double y) const;
    };

    /// Axes box with `ticks` evenly spaced labelled ticks on both axes.
    void draw_axes(SvgDocument& doc, const PlotFrame& frame, const std::string& x_label, const std::string& y_label,
                   int ticks = 5);
}
