// Static country geometry keyed by ISO 3166-1 alpha-2 code.
// The API only ever sends codes and values; placement on the world map
// is decided entirely by this file.

export interface CountryGeometry {
  name: string;
  lat: number;
  lon: number;
}

export const COUNTRY_GEOMETRY: Record<string, CountryGeometry> = {
  AT: { name: "Austria", lat: 47.52, lon: 14.55 },
  BD: { name: "Bangladesh", lat: 23.68, lon: 90.36 },
  BR: { name: "Brazil", lat: -14.24, lon: -51.93 },
  CH: { name: "Switzerland", lat: 46.82, lon: 8.23 },
  CN: { name: "China", lat: 35.86, lon: 104.2 },
  DE: { name: "Germany", lat: 51.17, lon: 10.45 },
  DK: { name: "Denmark", lat: 56.26, lon: 9.5 },
  EG: { name: "Egypt", lat: 26.82, lon: 30.8 },
  ES: { name: "Spain", lat: 40.46, lon: -3.75 },
  FI: { name: "Finland", lat: 61.92, lon: 25.75 },
  FR: { name: "France", lat: 46.6, lon: 1.89 },
  GB: { name: "United Kingdom", lat: 55.38, lon: -3.44 },
  ID: { name: "Indonesia", lat: -0.79, lon: 113.92 },
  IN: { name: "India", lat: 20.59, lon: 78.96 },
  IR: { name: "Iran", lat: 32.43, lon: 53.69 },
  IT: { name: "Italy", lat: 41.87, lon: 12.57 },
  JP: { name: "Japan", lat: 36.2, lon: 138.25 },
  KR: { name: "South Korea", lat: 35.91, lon: 127.77 },
  MX: { name: "Mexico", lat: 23.63, lon: -102.55 },
  NL: { name: "Netherlands", lat: 52.13, lon: 5.29 },
  NO: { name: "Norway", lat: 60.47, lon: 8.47 },
  PK: { name: "Pakistan", lat: 30.38, lon: 69.35 },
  PL: { name: "Poland", lat: 51.92, lon: 19.15 },
  RU: { name: "Russia", lat: 61.52, lon: 105.32 },
  SA: { name: "Saudi Arabia", lat: 23.89, lon: 45.08 },
  SE: { name: "Sweden", lat: 60.13, lon: 18.64 },
  TH: { name: "Thailand", lat: 15.87, lon: 100.99 },
  TR: { name: "Turkey", lat: 38.96, lon: 35.24 },
  UA: { name: "Ukraine", lat: 48.38, lon: 31.17 },
  US: { name: "United States", lat: 37.09, lon: -95.71 },
  VN: { name: "Vietnam", lat: 14.06, lon: 108.28 },
};

export interface Point {
  x: number;
  y: number;
}

/** Equirectangular projection onto a width x height canvas. */
export function project(lat: number, lon: number, width: number, height: number): Point {
  return {
    x: ((lon + 180) / 360) * width,
    y: ((90 - lat) / 180) * height,
  };
}
