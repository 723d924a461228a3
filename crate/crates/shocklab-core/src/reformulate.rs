//! Wave–transport reformulation residuals for the acoustical metric.
