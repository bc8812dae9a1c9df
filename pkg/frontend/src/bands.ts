/**
 * The 9-point glare scale as rendered zones.
 *
 * Interior cut points between adjacent ratings, highest severity first;
 * a score equal to a cut belongs to the band below it, and exactly 0 is
 * the Noticeable floor. These values back the glare panel's band layer.
 */

export const RATING_CUTS = [0.7671, 0.6576, 0.5207, 0.3015, 0.2192, 0.1644, 0.0548] as const;

export type Category =
  | "Unbearable"
  | "Disturbing"
  | "JustAdmissible"
  | "Acceptable"
  | "Noticeable";

const RATING_CATEGORIES: Category[] = [
  "Unbearable",
  "Unbearable",
  "Disturbing",
  "Disturbing",
  "JustAdmissible",
  "JustAdmissible",
  "Acceptable",
  "Acceptable",
  "Noticeable",
];

export const CATEGORY_COLORS: Record<Category, string> = {
  Unbearable: "#b62324",
  Disturbing: "#c46a1d",
  JustAdmissible: "#b5a11c",
  Acceptable: "#3c8d40",
  Noticeable: "#2f6f8f",
};

export function ratingCategory(rating: number): Category {
  if (!Number.isInteger(rating) || rating < 1 || rating > 9) {
    throw new RangeError(`rating ${rating} outside 1..9`);
  }
  return RATING_CATEGORIES[rating - 1];
}

/** Mirror of the server's scale: band lower bounds are exclusive. */
export function scoreToRating(score: number): number {
  if (!(score >= 0 && score <= 1)) {
    throw new RangeError(`score ${score} outside [0, 1]`);
  }
  if (score === 0) return 9;
  for (let rating = 1; rating <= RATING_CUTS.length; rating++) {
    if (score > RATING_CUTS[rating - 1]) return rating;
  }
  return 8;
}

export interface Band {
  rating: number;
  category: Category;
  /** Exclusive lower score bound (0 for rating 8's zone). */
  lo: number;
  /** Inclusive upper score bound. */
  hi: number;
}

/** Ratings 1..8 partition (0, 1]; rating 9 is the score-0 floor line. */
export function scaleBands(): Band[] {
  const uppers = [1.0, ...RATING_CUTS];
  const lowers = [...RATING_CUTS, 0.0];
  return uppers.map((hi, i) => ({
    rating: i + 1,
    category: ratingCategory(i + 1),
    lo: lowers[i],
    hi,
  }));
}

export interface BandRect {
  rating: number;
  category: Category;
  color: string;
  y: number;
  height: number;
}

/** Vertical zone rectangles: score 1 at y=0, score 0 at y=height.

 * Edges come from scoreToY on the exact cut constants, so adjacent zones
 * share bit-identical boundaries at the published cut points. */
export function bandRects(height: number): BandRect[] {
  return scaleBands().map((band) => {
    const top = scoreToY(band.hi, height);
    const bottom = scoreToY(band.lo, height);
    return {
      rating: band.rating,
      category: band.category,
      color: CATEGORY_COLORS[band.category],
      y: top,
      height: bottom - top,
    };
  });
}

export function scoreToY(score: number, height: number): number {
  return (1 - score) * height;
}
