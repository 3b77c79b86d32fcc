// table, model, dataset, attack, clean, attacked, printed drop (all in percent)
pub const CELLS: &[(&str, &str, &str, &str, f64, f64, f64)] = &[
    ("graph-min", "GCN", "PROTEINS", "Min", 73.98, 68.04, 8.04),
    ("graph-min", "GCN", "NCI1", "Min", 74.67, 33.91, 54.59),
    ("graph-min", "GCN", "DD", "Min", 70.02, 8.58, 87.57),
    ("graph-min", "GIN", "PROTEINS", "Min", 66.02, 46.05, 30.24),
    ("graph-min", "GIN", "NCI1", "Min", 76.04, 38.65, 49.17),
    ("graph-min", "GIN", "DD", "Min", 63.44, 16.17, 74.51),
    ("graph-min", "InfoGraph", "PROTEINS", "Min", 63.93, 31.53, 50.83),
    ("graph-min", "InfoGraph", "NCI1", "Min", 66.87, 14.71, 78.10),
    ("graph-min", "InfoGraph", "DD", "Min", 64.77, 20.11, 68.92),
    ("graph-min", "GraphCL", "PROTEINS", "Min", 65.93, 40.29, 38.89),
    ("graph-min", "GraphCL", "NCI1", "Min", 73.09, 32.20, 55.94),
    ("graph-min", "GraphCL", "DD", "Min", 68.85, 15.74, 75.34),
    ("graph-min", "AD-GCL", "PROTEINS", "Min", 73.66, 26.31, 64.28),
    ("graph-min", "AD-GCL", "NCI1", "Min", 71.79, 14.35, 80.01),
    ("graph-min", "AD-GCL", "DD", "Min", 76.71, 29.17, 61.71),
    ("node-min", "GCN", "Cora", "Min", 77.57, 59.35, 23.50),
    ("node-min", "GCN", "Citeseer", "Min", 63.99, 47.69, 25.46),
    ("node-min", "GCN", "Pubmed", "Min", 75.31, 57.01, 24.31),
    ("node-min", "GCN", "OGB", "Min", 52.39, 9.08, 82.67),
    ("node-min", "DGI", "Cora", "Min", 83.24, 75.69, 9.08),
    ("node-min", "DGI", "Citeseer", "Min", 72.91, 67.46, 7.47),
    ("node-min", "DGI", "Pubmed", "Min", 81.46, 77.19, 5.23),
    ("node-min", "DGI", "OGB", "Min", 60.18, 53.28, 11.45),
    ("node-min", "GraphCL", "Cora", "Min", 71.99, 54.71, 24.00),
    ("node-min", "GraphCL", "Citeseer", "Min", 59.57, 46.53, 21.89),
    ("node-min", "GraphCL", "Pubmed", "Min", 74.29, 53.99, 27.33),
    ("node-min", "GraphCL", "OGB", "Min", 52.32, 14.31, 72.65),
    ("node-min", "GCA", "Cora", "Min", 79.07, 61.63, 22.08),
    ("node-min", "GCA", "Citeseer", "Min", 60.14, 43.61, 27.51),
    ("node-min", "GCA", "Pubmed", "Min", 78.62, 56.77, 27.80),
    ("graph-attacks", "GCN", "PROTEINS", "flip", 73.98, 73.41, 0.78),
    ("graph-attacks", "GCN", "PROTEINS", "PGD", 73.98, 68.68, 7.16),
    ("graph-attacks", "GCN", "PROTEINS", "PR-BCD", 73.98, 68.04, 8.04),
    ("graph-attacks", "GCN", "PROTEINS", "GR-BCD", 73.98, 72.50, 2.00),
    ("graph-attacks", "GCN", "NCI1", "flip", 74.67, 68.12, 8.77),
    ("graph-attacks", "GCN", "NCI1", "PGD", 74.67, 52.69, 29.43),
    ("graph-attacks", "GCN", "NCI1", "PR-BCD", 74.67, 33.91, 54.59),
    ("graph-attacks", "GCN", "NCI1", "GR-BCD", 74.67, 49.47, 33.75),
    ("graph-attacks", "GCN", "DD", "flip", 70.02, 60.29, 13.98),
    ("graph-attacks", "GCN", "DD", "PGD", 70.02, 51.21, 26.85),
    ("graph-attacks", "GCN", "DD", "PR-BCD", 70.02, 8.58, 87.57),
    ("graph-attacks", "GCN", "DD", "GR-BCD", 70.02, 57.33, 18.24),
    ("graph-attacks", "GIN", "PROTEINS", "flip", 66.02, 59.71, 9.55),
    ("graph-attacks", "GIN", "PROTEINS", "PGD", 66.02, 61.12, 7.42),
    ("graph-attacks", "GIN", "PROTEINS", "PR-BCD", 66.02, 48.34, 26.77),
    ("graph-attacks", "GIN", "PROTEINS", "GR-BCD", 66.02, 46.05, 30.24),
    ("graph-attacks", "GIN", "NCI1", "flip", 76.04, 54.47, 28.37),
    ("graph-attacks", "GIN", "NCI1", "PGD", 76.04, 71.59, 5.86),
    ("graph-attacks", "GIN", "NCI1", "PR-BCD", 76.04, 38.65, 49.17),
    ("graph-attacks", "GIN", "NCI1", "GR-BCD", 76.04, 43.99, 42.15),
    ("graph-attacks", "GIN", "DD", "flip", 63.44, 56.73, 10.57),
    ("graph-attacks", "GIN", "DD", "PGD", 63.44, 58.23, 8.21),
    ("graph-attacks", "GIN", "DD", "PR-BCD", 63.44, 16.17, 74.51),
    ("graph-attacks", "GIN", "DD", "GR-BCD", 63.44, 34.83, 45.10),
    ("graph-attacks", "InfoGraph", "PROTEINS", "flip", 63.93, 56.85, 11.10),
    ("graph-attacks", "InfoGraph", "PROTEINS", "PGD", 63.93, 51.65, 19.42),
    ("graph-attacks", "InfoGraph", "PROTEINS", "PR-BCD", 63.93, 31.53, 50.83),
    ("graph-attacks", "InfoGraph", "PROTEINS", "GR-BCD", 63.93, 47.23, 26.19),
    ("graph-attacks", "InfoGraph", "NCI1", "flip", 66.87, 50.88, 23.83),
    ("graph-attacks", "InfoGraph", "NCI1", "PGD", 66.87, 30.68, 54.18),
    ("graph-attacks", "InfoGraph", "NCI1", "PR-BCD", 66.87, 14.71, 78.10),
    ("graph-attacks", "InfoGraph", "NCI1", "GR-BCD", 66.87, 41.13, 38.45),
    ("graph-attacks", "InfoGraph", "DD", "flip", 64.77, 58.84, 9.15),
    ("graph-attacks", "InfoGraph", "DD", "PGD", 64.77, 55.12, 14.87),
    ("graph-attacks", "InfoGraph", "DD", "PR-BCD", 64.77, 20.11, 68.92),
    ("graph-attacks", "InfoGraph", "DD", "GR-BCD", 64.77, 24.99, 61.44),
    ("graph-attacks", "GraphCL", "PROTEINS", "flip", 65.93, 61.62, 6.53),
    ("graph-attacks", "GraphCL", "PROTEINS", "PGD", 65.93, 60.86, 7.68),
    ("graph-attacks", "GraphCL", "PROTEINS", "PR-BCD", 65.93, 49.48, 24.95),
    ("graph-attacks", "GraphCL", "PROTEINS", "GR-BCD", 65.93, 40.29, 38.89),
    ("graph-attacks", "GraphCL", "NCI1", "flip", 73.09, 59.43, 18.69),
    ("graph-attacks", "GraphCL", "NCI1", "PGD", 73.09, 68.32, 10.63),
    ("graph-attacks", "GraphCL", "NCI1", "PR-BCD", 73.09, 32.20, 55.94),
    ("graph-attacks", "GraphCL", "NCI1", "GR-BCD", 73.09, 37.09, 49.26),
    ("graph-attacks", "GraphCL", "DD", "flip", 68.85, 58.43, 8.48),
    ("graph-attacks", "GraphCL", "DD", "PGD", 68.85, 58.35, 8.61),
    ("graph-attacks", "GraphCL", "DD", "PR-BCD", 68.85, 15.74, 75.34),
    ("graph-attacks", "GraphCL", "DD", "GR-BCD", 68.85, 32.82, 48.60),
    ("graph-attacks", "AD-GCL", "PROTEINS", "flip", 73.66, 65.37, 11.25),
    ("graph-attacks", "AD-GCL", "PROTEINS", "PGD", 73.66, 61.44, 16.59),
    ("graph-attacks", "AD-GCL", "PROTEINS", "PR-BCD", 73.66, 26.31, 64.28),
    ("graph-attacks", "AD-GCL", "PROTEINS", "GR-BCD", 73.66, 63.96, 13.17),
    ("graph-attacks", "AD-GCL", "NCI1", "flip", 71.79, 58.12, 19.04),
    ("graph-attacks", "AD-GCL", "NCI1", "PGD", 71.79, 50.32, 29.91),
    ("graph-attacks", "AD-GCL", "NCI1", "PR-BCD", 71.79, 14.35, 80.01),
    ("graph-attacks", "AD-GCL", "NCI1", "GR-BCD", 71.79, 54.52, 24.06),
    ("graph-attacks", "AD-GCL", "DD", "flip", 76.71, 75.18, 1.95),
    ("graph-attacks", "AD-GCL", "DD", "PGD", 76.71, 44.36, 42.18),
    ("graph-attacks", "AD-GCL", "DD", "PR-BCD", 76.71, 29.17, 61.71),
    ("graph-attacks", "AD-GCL", "DD", "GR-BCD", 76.71, 37.48, 50.98),
    ("node-attacks", "GCN", "Cora", "flip", 77.57, 76.55, 1.32),
    ("node-attacks", "GCN", "Cora", "PR-BCD", 77.57, 59.35, 23.50),
    ("node-attacks", "GCN", "Cora", "GR-BCD", 77.57, 70.37, 9.29),
    ("node-attacks", "GCN", "Citeseer", "flip", 63.99, 62.65, 2.09),
    ("node-attacks", "GCN", "Citeseer", "PR-BCD", 63.99, 47.69, 25.46),
    ("node-attacks", "GCN", "Citeseer", "GR-BCD", 63.99, 55.31, 13.57),
    ("node-attacks", "GCN", "Pubmed", "flip", 75.31, 74.34, 1.31),
    ("node-attacks", "GCN", "Pubmed", "PR-BCD", 75.31, 57.01, 24.31),
    ("node-attacks", "GCN", "Pubmed", "GR-BCD", 75.31, 64.33, 14.59),
    ("node-attacks", "GCN", "OGB", "flip", 68.22, 66.07, 3.15),
    ("node-attacks", "GCN", "OGB", "PR-BCD", 68.22, 52.54, 22.99),
    ("node-attacks", "GCN", "OGB", "GR-BCD", 68.22, 49.58, 27.33),
    ("node-attacks", "DGI", "Cora", "flip", 83.24, 82.65, 0.71),
    ("node-attacks", "DGI", "Cora", "PR-BCD", 83.24, 75.69, 9.08),
    ("node-attacks", "DGI", "Cora", "GR-BCD", 83.24, 80.13, 3.73),
    ("node-attacks", "DGI", "Citeseer", "flip", 72.91, 72.64, 0.39),
    ("node-attacks", "DGI", "Citeseer", "PR-BCD", 72.91, 67.47, 7.47),
    ("node-attacks", "DGI", "Citeseer", "GR-BCD", 72.91, 70.36, 3.52),
    ("node-attacks", "DGI", "Pubmed", "flip", 81.46, 80.72, 0.91),
    ("node-attacks", "DGI", "Pubmed", "PR-BCD", 81.46, 77.19, 5.23),
    ("node-attacks", "DGI", "Pubmed", "GR-BCD", 81.46, 77.12, 5.33),
    ("node-attacks", "DGI", "OGB", "flip", 60.18, 59.14, 1.72),
    ("node-attacks", "DGI", "OGB", "PR-BCD", 60.18, 53.28, 11.45),
    ("node-attacks", "DGI", "OGB", "GR-BCD", 60.18, 54.19, 9.96),
    ("node-attacks", "GraphCL", "Cora", "flip", 71.99, 70.86, 1.57),
    ("node-attacks", "GraphCL", "Cora", "PR-BCD", 71.99, 54.71, 24.00),
    ("node-attacks", "GraphCL", "Cora", "GR-BCD", 71.99, 60.15, 16.44),
    ("node-attacks", "GraphCL", "Citeseer", "flip", 59.57, 58.61, 1.62),
    ("node-attacks", "GraphCL", "Citeseer", "PR-BCD", 59.57, 46.53, 21.89),
    ("node-attacks", "GraphCL", "Citeseer", "GR-BCD", 59.57, 48.99, 17.77),
    ("node-attacks", "GraphCL", "Pubmed", "flip", 74.29, 72.86, 1.92),
    ("node-attacks", "GraphCL", "Pubmed", "PR-BCD", 74.29, 58.71, 20.96),
    ("node-attacks", "GraphCL", "Pubmed", "GR-BCD", 74.29, 53.99, 27.33),
    ("node-attacks", "GraphCL", "OGB", "flip", 62.78, 60.37, 3.83),
    ("node-attacks", "GraphCL", "OGB", "PR-BCD", 62.78, 49.07, 21.84),
    ("node-attacks", "GraphCL", "OGB", "GR-BCD", 62.78, 36.57, 41.75),
    ("node-attacks", "GCA", "Cora", "flip", 79.07, 78.30, 0.98),
    ("node-attacks", "GCA", "Cora", "PR-BCD", 79.07, 61.63, 22.08),
    ("node-attacks", "GCA", "Cora", "GR-BCD", 79.07, 72.59, 8.22),
    ("node-attacks", "GCA", "Citeseer", "flip", 60.14, 59.21, 1.54),
    ("node-attacks", "GCA", "Citeseer", "PR-BCD", 60.14, 43.61, 27.51),
    ("node-attacks", "GCA", "Citeseer", "GR-BCD", 60.14, 50.45, 16.14),
    ("node-attacks", "GCA", "Pubmed", "flip", 78.62, 76.09, 3.22),
    ("node-attacks", "GCA", "Pubmed", "PR-BCD", 78.62, 56.77, 27.80),
    ("node-attacks", "GCA", "Pubmed", "GR-BCD", 78.62, 57.67, 26.67),
];
