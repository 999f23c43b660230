#pragma once

#include <string>

namespace psephos::svg {

// Minimal self-contained SVG writer: enough for heatmap panels.
class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0);
  void text(double x, double y, const std::string& content, double size = 12.0,
            const std::string& anchor = "start");

  void write(const std::string& path) const;

 private:
  double width_, height_;
  std::string body_;
};

}  // namespace psephos::svg
