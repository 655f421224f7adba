#include "maniapipe/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace maniapipe::eval {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string tasks_label(const std::vector<int>& tasks) {
  std::string s;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i) s += "-";
    s += std::to_string(tasks[i]);
  }
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

std::string render_text(const std::vector<ReportRow>& rows,
                        const ReferenceRegistry& registry) {
  std::ostringstream out;
  out << "Task-condition results (this run)\n";
  out << "---------------------------------\n";
  out << "tasks    UAR(same)  UAR(whole)  ref(same)  ref(whole)\n";
  for (const ReportRow& row : rows) {
    const std::string label = tasks_label(row.tasks);
    std::string ref_same = "-", ref_whole = "-";
    for (const TaskGroupReference& ref : registry.task_groups) {
      if (ref.tasks == label) {
        ref_same = fmt("%.2f", ref.uar_same);
        ref_whole = fmt("%.2f", ref.uar_whole);
      }
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%-8s %-10s %-11s %-10s %s\n", label.c_str(),
                  fmt("%.3f", row.uar_same).c_str(), fmt("%.3f", row.uar_whole).c_str(),
                  ref_same.c_str(), ref_whole.c_str());
    out << line;
  }
  out << "\n";
  out << "chance UAR: " << fmt("%.3f", registry.chance_uar) << "\n";
  out << "reference (original BD corpus, display only): best dev UAR "
      << fmt("%.2f", registry.best_reported_dev_uar)
      << " (tasks 6-7, whole-recording dev), cross-condition dev UAR "
      << fmt("%.2f", registry.cross_condition_dev_uar) << " (task-7 model)\n";
  if (!registry.per_task_values_available) {
    out << "per-task reference values were only published as a figure and are "
           "not replicated here\n";
  }
  out << "\nReference systems on the original BD corpus (display only)\n";
  out << "-----------------------------------------------------------\n";
  for (const ReferenceEntry& entry : registry.related_systems) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-37s %-42s %-26s dev %-6s test %s\n",
                  entry.system.c_str(), entry.features.c_str(),
                  entry.classifier.c_str(),
                  entry.dev_uar ? fmt("%.3f", *entry.dev_uar).c_str() : "-",
                  entry.test_uar ? fmt("%.3f", *entry.test_uar).c_str() : "-");
    out << line;
  }
  return out.str();
}

std::string render_bar_chart(const std::vector<ReportRow>& rows,
                             const ReferenceRegistry& registry) {
  // Single-task rows only, drawn as UAR(same) bars on a 0..1 axis.
  std::vector<const ReportRow*> single;
  for (const ReportRow& row : rows) {
    if (row.tasks.size() == 1) single.push_back(&row);
  }

  const double width = 640, height = 360;
  const double left = 60, bottom = 320, top = 40;
  const double axis_h = bottom - top;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"monospace\" "
         "font-size=\"14\">UAR by task (dev)</text>\n";

  for (int grid = 0; grid <= 10; grid += 2) {
    const double y = bottom - axis_h * grid / 10.0;
    svg << "<line x1=\"" << left << "\" y1=\"" << fmt("%.2f", y) << "\" x2=\""
        << width - 20 << "\" y2=\"" << fmt("%.2f", y)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 36 << "\" y=\"" << fmt("%.2f", y + 4)
        << "\" font-family=\"monospace\" font-size=\"11\">"
        << fmt("%.1f", grid / 10.0) << "</text>\n";
  }

  const double slot = single.empty() ? 1.0 : (width - left - 40) / single.size();
  for (std::size_t i = 0; i < single.size(); ++i) {
    const double uar = std::clamp(single[i]->uar_same, 0.0, 1.0);
    const double bar_h = axis_h * uar;
    const double x = left + slot * i + slot * 0.2;
    svg << "<rect x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", bottom - bar_h)
        << "\" width=\"" << fmt("%.2f", slot * 0.6) << "\" height=\""
        << fmt("%.2f", bar_h) << "\" fill=\"#4878a8\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", x + slot * 0.3 - 4) << "\" y=\""
        << bottom + 16 << "\" font-family=\"monospace\" font-size=\"12\">"
        << single[i]->tasks[0] << "</text>\n";
    svg << "<text x=\"" << fmt("%.2f", x - 2) << "\" y=\""
        << fmt("%.2f", bottom - bar_h - 4)
        << "\" font-family=\"monospace\" font-size=\"10\">"
        << fmt("%.2f", single[i]->uar_same) << "</text>\n";
  }

  // Reference lines: chance level plus the best reported dev UAR.
  auto ref_line = [&](double value, const char* color, const std::string& label) {
    const double y = bottom - axis_h * std::clamp(value, 0.0, 1.0);
    svg << "<line x1=\"" << left << "\" y1=\"" << fmt("%.2f", y) << "\" x2=\""
        << width - 20 << "\" y2=\"" << fmt("%.2f", y) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"6,4\"/>\n";
    svg << "<text x=\"" << width - 160 << "\" y=\"" << fmt("%.2f", y - 4)
        << "\" font-family=\"monospace\" font-size=\"10\" fill=\"" << color << "\">"
        << label << "</text>\n";
  };
  ref_line(registry.chance_uar, "#b05050", "chance " + fmt("%.2f", registry.chance_uar));
  ref_line(registry.best_reported_dev_uar, "#508050",
           "reference " + fmt("%.2f", registry.best_reported_dev_uar));

  svg << "</svg>\n";
  return svg.str();
}

std::string render_heatmap(const ConfusionMatrix& cm, const std::string& title) {
  static const char* kClassNames[] = {"Rem", "Hypo", "Mania"};
  long max_count = 1;
  for (const auto& row : cm.counts) {
    for (long v : row) max_count = std::max(max_count, v);
  }
  const double cell = 70, left = 80, top = 60;
  const double width = left + 3 * cell + 40, height = top + 3 * cell + 40;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"16\" y=\"24\" font-family=\"monospace\" font-size=\"13\">"
      << title << "</text>\n";
  for (int i = 0; i < corpus::kNumLabels; ++i) {
    svg << "<text x=\"" << fmt("%.2f", left + cell * i + cell / 2 - 14) << "\" y=\""
        << top - 8 << "\" font-family=\"monospace\" font-size=\"11\">"
        << kClassNames[i] << "</text>\n";
    svg << "<text x=\"16\" y=\"" << fmt("%.2f", top + cell * i + cell / 2 + 4)
        << "\" font-family=\"monospace\" font-size=\"11\">" << kClassNames[i]
        << "</text>\n";
  }
  for (int r = 0; r < corpus::kNumLabels; ++r) {
    for (int c = 0; c < corpus::kNumLabels; ++c) {
      const double intensity =
          static_cast<double>(cm.counts[r][c]) / static_cast<double>(max_count);
      const int shade = static_cast<int>(255 - intensity * 170);
      svg << "<rect x=\"" << fmt("%.2f", left + cell * c) << "\" y=\""
          << fmt("%.2f", top + cell * r) << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"rgb(" << shade << "," << shade
          << ",255)\" stroke=\"#888888\"/>\n";
      svg << "<text x=\"" << fmt("%.2f", left + cell * c + cell / 2 - 8) << "\" y=\""
          << fmt("%.2f", top + cell * r + cell / 2 + 5)
          << "\" font-family=\"monospace\" font-size=\"13\">" << cm.counts[r][c]
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

void render_report(const std::vector<ReportRow>& rows, const ReferenceRegistry& registry,
                   const std::filesystem::path& out_dir) {
  if (rows.empty()) {
    throw Error(ErrorCode::EmptySet, "render_report needs at least one row");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());

  write_file(out_dir / "report.txt", render_text(rows, registry));
  write_file(out_dir / "uar_by_task.svg", render_bar_chart(rows, registry));

  const ReportRow* best_same = &rows[0];
  const ReportRow* best_whole = &rows[0];
  for (const ReportRow& row : rows) {
    if (row.uar_same > best_same->uar_same) best_same = &row;
    if (row.uar_whole > best_whole->uar_whole) best_whole = &row;
  }
  write_file(out_dir / "cm_same.svg",
             render_heatmap(best_same->cm_same,
                            "dev confusion, tasks " + tasks_label(best_same->tasks) +
                                " (same-task eval)"));
  write_file(out_dir / "cm_whole.svg",
             render_heatmap(best_whole->cm_whole,
                            "dev confusion, tasks " + tasks_label(best_whole->tasks) +
                                " (whole-recording eval)"));
  save_rows(rows, out_dir / "rows.json");
}

}  // namespace maniapipe::eval
