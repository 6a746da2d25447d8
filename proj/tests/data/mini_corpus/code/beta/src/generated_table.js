// Code generated by tablegen. DO NOT EDIT.
export const TABLE = [1, 2, 3, 5, 8, 13, 21, 34];
