export { aggregateBars, aggregateSeries } from "./aggregate.js";
export type { BarGroup, Point, Series } from "./aggregate.js";
export { DataError, loadCsv, numeric, requireColumns } from "./csv.js";
export type { Row } from "./csv.js";
export { FAMILIES, renderFigure } from "./figures.js";
export type { Family, FigureSpec } from "./figures.js";
export { barChart, lineChart } from "./svg.js";
