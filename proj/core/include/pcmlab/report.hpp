#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcmlab/distill.hpp"
#include "pcmlab/sampler.hpp"

namespace pcmlab {

// CSV and SVG renderings are pure (and byte-stable given identical inputs);
// the write_* wrappers add file IO.  Doubles are printed in the shortest
// form that round-trips, so parsing a CSV back recovers exact values.
std::string render_loss_csv(const std::vector<LossRow>& rows);
std::string render_samples_csv(const SampleRun& run, uint64_t seed);

// 640x640 scatter, axes fitted to the data bounding box plus a 10% margin,
// one fill color per class (the null class renders gray)
std::string render_scatter_svg(const SampleRun& run);

void write_text_file(const std::string& path, const std::string& content);

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows);
void write_samples_csv(const std::string& path, const SampleRun& run, uint64_t seed);
void write_scatter_svg(const std::string& path, const SampleRun& run);

}  // namespace pcmlab
