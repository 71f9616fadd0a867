/** Fixed styling so rendered SVGs diff cleanly between runs. */

export const theme = {
  width: 640,
  height: 420,
  margin: { top: 42, right: 24, bottom: 52, left: 64 },
  background: "#ffffff",
  axis: "#333333",
  grid: "#dddddd",
  fontFamily: "Helvetica, Arial, sans-serif",
  fontSize: 12,
  titleSize: 14,
  footerSize: 9,
  series: ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"],
  bar: "#4c78a8",
  heat: { low: "#f7fbff", high: "#08306b" },
} as const;
