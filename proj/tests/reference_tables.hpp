#ifndef LATBIN_REFERENCE_TABLES_HPP
#define LATBIN_REFERENCE_TABLES_HPP

// Reference values for the 16-setting study.

#include <array>

namespace latbin::testing {

struct EffRow {
  int setting;
  double rho, gamma, rho_gamma;
};

inline constexpr std::array<EffRow, 16> kEfficiencyTable = {{
    {1, 0.706, 0.837, 0.591},  {2, 0.747, 0.859, 0.642},  {3, 0.706, 0.732, 0.517},
    {4, 0.747, 0.773, 0.578},  {5, 0.706, 0.890, 0.629},  {6, 0.747, 0.902, 0.674},
    {7, 0.706, 0.799, 0.564},  {8, 0.747, 0.828, 0.618},  {9, 0.729, 0.858, 0.625},
    {10, 0.786, 0.902, 0.709}, {11, 0.729, 0.765, 0.558}, {12, 0.786, 0.816, 0.641},
    {13, 0.729, 0.904, 0.659}, {14, 0.786, 0.941, 0.740}, {15, 0.729, 0.824, 0.601},
    {16, 0.786, 0.871, 0.685},
}};

struct SimRow {
  int setting;
  double bias, mse, coverage;
};

inline constexpr std::array<SimRow, 16> kSimulationTable = {{
    {1, 0.005, 0.003, 0.956},  {2, 0.007, 0.015, 0.956},  {3, 0.003, 0.002, 0.947},
    {4, 0.008, 0.007, 0.948},  {5, 0.005, 0.002, 0.951},  {6, 0.004, 0.013, 0.927},
    {7, 0.002, 0.001, 0.951},  {8, 0.004, 0.005, 0.945},  {9, 0.000, 0.003, 0.949},
    {10, 0.014, 0.015, 0.948}, {11, 0.001, 0.001, 0.946}, {12, -0.001, 0.007, 0.952},
    {13, 0.001, 0.002, 0.948}, {14, 0.014, 0.013, 0.949}, {15, 0.001, 0.001, 0.947},
    {16, 0.004, 0.006, 0.945},
}};

}  // namespace latbin::testing

#endif  // LATBIN_REFERENCE_TABLES_HPP
