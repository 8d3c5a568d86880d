struct Date {
    int year;
    int month;
    int day;
};

int is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) {
        return 29;
    }
    return days[m - 1];
}

int date_valid(const struct Date *d) {
    if (d->month < 1 || d->month > 12) {
        return 0;
    }
    return d->day >= 1 && d->day <= days_in_month(d->year, d->month);
}
